#include <doctest.h>

#include <filesystem>
#include <map>
#include <sstream>

#include "swapnas/cli.hpp"
#include "swapnas/io.hpp"

using namespace swapnas;
namespace fs = std::filesystem;

namespace {

const fs::path kData = SWAPNAS_TEST_DATA;

struct Run {
  int code;
  std::string out, err;
};

Run run(std::vector<std::string> args) {
  std::ostringstream out, err;
  const int code = run_cli(args, out, err);
  return {code, out.str(), err.str()};
}

std::map<std::string, std::string> key_values(const std::string& text) {
  std::map<std::string, std::string> kv;
  std::istringstream is(text);
  std::string line;
  while (std::getline(is, line))
    if (auto eq = line.find('='); eq != std::string::npos) kv[line.substr(0, eq)] = line.substr(eq + 1);
  return kv;
}

struct TempDir {
  fs::path path;
  explicit TempDir(const std::string& name) : path(fs::temp_directory_path() / name) {
    fs::remove_all(path);
    fs::create_directories(path);
  }
  ~TempDir() { fs::remove_all(path); }
};

}  // namespace

TEST_CASE("score prints every metric as key=value") {
  const Run r = run({"score", "--cell", (kData / "example.cell").string(), "--seed", "7", "--batch",
                     "gauss:8x3x8x8"});
  REQUIRE(r.code == 0);
  const auto kv = key_values(r.out);
  for (const char* key : {"psi", "psi_reg", "theta_mb", "flops", "v", "card_a", "params", "mu", "sigma"})
    CHECK(kv.count(key) == 1);
  CHECK(std::stod(kv.at("psi_reg")) <= std::stod(kv.at("psi")));
  CHECK(std::stoull(kv.at("card_a")) <= 8);

  const Run again = run({"score", "--cell", (kData / "example.cell").string(), "--seed", "7", "--batch",
                         "gauss:8x3x8x8"});
  CHECK(again.out == r.out);
  const auto psi_at = [](const char* seed) {
    return key_values(run({"score", "--cell", (kData / "example.cell").string(), "--seed", seed, "--batch",
                           "gauss:32x3x8x8"}).out).at("psi");
  };
  CHECK(psi_at("7") == psi_at("7"));
  CHECK(psi_at("7") != psi_at("8"));

  const Run plain = run({"score", "--cell", (kData / "example.cell").string(), "--batch", "gauss:8x3x8x8", "--mu",
                         "none", "--sigma", "none"});
  REQUIRE(plain.code == 0);
  CHECK(std::stod(key_values(plain.out).at("psi_reg")) == std::stod(key_values(plain.out).at("psi")));
}

TEST_CASE("score table mode writes a score file") {
  TempDir tmp("swapnas_cli_score");
  const fs::path out = tmp.path / "scores.csv";
  const Run r = run({"score", "--table", (kData / "truth3.csv").string(), "--batch", "gauss:4x3x6x6", "--depth", "1",
                     "--reductions", "", "--stem", "4", "--runs", "2", "--out", out.string()});
  REQUIRE(r.code == 0);
  const std::string text = read_text_file(out);
  CHECK(text.rfind("arch_id,seed,psi,psi_reg,card_a,values,theta_mb,params,flops,batch\n", 0) == 0);
  CHECK(std::count(text.begin(), text.end(), '\n') == 7);
  CHECK(!fs::exists(out.string() + ".tmp"));

  const Run corr = run({"correlate", "--scores", out.string(), "--truth", (kData / "truth3.csv").string()});
  CHECK(corr.code == 0);
  CHECK(key_values(corr.out).at("seeds") == "2");
}

TEST_CASE("search is byte-identical across runs and honours --seed") {
  TempDir tmp("swapnas_cli_search");
  const std::string cfg = (kData / "small_search.cfg").string();
  const fs::path a = tmp.path / "a.txt", b = tmp.path / "b.txt", c = tmp.path / "c.txt";
  REQUIRE(run({"search", "--config", cfg, "--out", a.string(), "--quiet"}).code == 0);
  REQUIRE(run({"search", "--config", cfg, "--out", b.string(), "--quiet"}).code == 0);
  CHECK(read_text_file(a) == read_text_file(b));
  REQUIRE(run({"search", "--config", cfg, "--out", c.string(), "--quiet", "--seed", "99"}).code == 0);
  CHECK(read_text_file(a) != read_text_file(c));
  CHECK(read_text_file(c).find("seed=99") != std::string::npos);

  const Run logged = run({"search", "--config", cfg});
  CHECK(logged.err.find("cycle 4 ") != std::string::npos);
}

TEST_CASE("search resumes from a checkpoint") {
  TempDir tmp("swapnas_cli_resume");
  const std::string cfg = (kData / "small_search.cfg").string();
  const fs::path full = tmp.path / "full.txt", resumed = tmp.path / "resumed.txt", ck = tmp.path / "ck.txt";
  REQUIRE(run({"search", "--config", cfg, "--out", full.string(), "--quiet"}).code == 0);

  std::string text = read_text_file(cfg);
  text.replace(text.find("cycles=4"), 8, "cycles=2");
  const fs::path short_cfg = tmp.path / "short.cfg";
  write_file_atomic(short_cfg, text);
  REQUIRE(run({"search", "--config", short_cfg.string(), "--checkpoint", ck.string(), "--quiet"}).code == 0);
  REQUIRE(fs::exists(ck));
  REQUIRE(run({"search", "--config", cfg, "--checkpoint", ck.string(), "--resume", "--out", resumed.string(),
               "--quiet"})
              .code == 0);
  CHECK(read_text_file(full) == read_text_file(resumed));

  // A checkpoint from another configuration is refused.
  const Run clash = run({"search", "--config", cfg, "--seed", "1", "--checkpoint", ck.string(), "--resume", "--quiet"});
  CHECK(clash.code == 1);
}

TEST_CASE("correlate reports perfect rank agreement") {
  const Run r = run({"correlate", "--scores", (kData / "scores3.csv").string(), "--truth",
                     (kData / "truth3.csv").string()});
  REQUIRE(r.code == 0);
  CHECK(r.out.find("swap_rho=1.0\n") != std::string::npos);
  const auto kv = key_values(r.out);
  CHECK(kv.at("swap_reg_rho") == "1.0");
  CHECK(kv.at("params_rho") == "1.0");
  CHECK(kv.at("samples") == "3");
}

TEST_CASE("correlate writes report and plot files") {
  TempDir tmp("swapnas_cli_corr");
  const fs::path rep = tmp.path / "r.csv", plot = tmp.path / "p.csv";
  REQUIRE(run({"correlate", "--scores", (kData / "scores3.csv").string(), "--truth", (kData / "truth3.csv").string(),
               "--out", rep.string(), "--plot", plot.string()})
              .code == 0);
  CHECK(read_text_file(rep).find("seed0,3,1.0,1.0,1.0,1.0") != std::string::npos);
  CHECK(read_text_file(plot).rfind("series,x,y\npsi,2100.0,0.72\n", 0) == 0);
}

TEST_CASE("sweep, histogram and ablate-dims run") {
  const Run sweep = run({"sweep", "--scores", (kData / "scores3.csv").string(), "--truth",
                         (kData / "truth3.csv").string(), "--grid", "0.5:0.5,1:1"});
  REQUIRE(sweep.code == 0);
  CHECK(sweep.out.rfind("mu,sigma,seed0,mean\nN/A,N/A,1.0,1.0\n0.5,0.5,", 0) == 0);
  const Run autogrid = run({"sweep", "--scores", (kData / "scores3.csv").string(), "--truth",
                            (kData / "truth3.csv").string()});
  CHECK(autogrid.code == 0);
  CHECK(std::count(autogrid.out.begin(), autogrid.out.end(), '\n') == 8);

  const Run hist = run({"histogram", "--count", "200", "--bins", "4", "--seed", "2"});
  REQUIRE(hist.code == 0);
  CHECK(hist.out.rfind("bin_lo,bin_hi,count\n", 0) == 0);
  CHECK(key_values(hist.out).count("mu") == 1);
  CHECK(run({"histogram", "--count", "200", "--bins", "4", "--seed", "2"}).out == hist.out);

  const Run ab = run({"ablate-dims", "--count", "3", "--dims", "3x3x3,3x6x6", "--samples", "4", "--depth", "1",
                      "--reductions", "", "--stem", "4"});
  REQUIRE(ab.code == 0);
  CHECK(std::count(ab.out.begin(), ab.out.end(), '\n') == 3);
  const Run ab_truth = run({"ablate-dims", "--truth", (kData / "truth3.csv").string(), "--dims", "3x4x4",
                            "--samples", "4", "--depth", "1", "--reductions", "", "--stem", "4"});
  CHECK(ab_truth.code == 0);
}

TEST_CASE("exit codes and diagnostics") {
  const Run unknown = run({"score", "--bogus"});
  CHECK(unknown.code == 1);
  CHECK(!unknown.err.empty());
  CHECK(run({}).code == 1);
  CHECK(run({"frobnicate"}).code == 1);
  CHECK(run({"score", "--cell", "/no/such/file.cell"}).code == 1);
  CHECK(run({"score", "--cell", (kData / "example.cell").string(), "--batch", "gauss:1x2"}).code == 1);
  CHECK(run({"score", "--cell", (kData / "example.cell").string(), "--mu", "auto", "--sigma", "3"}).code == 1);
  CHECK(run({"score"}).code == 1);

  TempDir tmp("swapnas_cli_errors");
  const fs::path bad_cfg = tmp.path / "bad.cfg";
  write_file_atomic(bad_cfg, "population=4\ncolour=blue\n");
  const Run cfg = run({"search", "--config", bad_cfg.string()});
  CHECK(cfg.code == 1);
  CHECK(cfg.err.find("line 2") != std::string::npos);
  CHECK(std::count(cfg.err.begin(), cfg.err.end(), '\n') == 1);

  // A single matching row cannot be correlated: runtime failure.
  const fs::path one = tmp.path / "one.csv";
  write_file_atomic(one, "arch_id,seed,psi,psi_reg,theta_mb,flops\narch-0,0,1,1.0,0.1,1\n");
  CHECK(run({"correlate", "--scores", one.string(), "--truth", (kData / "truth3.csv").string()}).code == 2);

  // Unwritable output path.
  CHECK(run({"histogram", "--count", "10", "--out", "/no/such/dir/h.csv"}).code == 2);
}

TEST_CASE("help output matches the golden files") {
  const Run top = run({"--help"});
  CHECK(top.code == 0);
  CHECK(top.out == read_text_file(kData / "golden" / "help.txt"));
  for (const char* cmd : {"score", "search", "correlate", "sweep", "ablate-dims", "histogram"}) {
    INFO(cmd);
    const Run h = run({cmd, "--help"});
    CHECK(h.code == 0);
    CHECK(h.out == read_text_file(kData / "golden" / (std::string("help_") + cmd + ".txt")));
  }
}
