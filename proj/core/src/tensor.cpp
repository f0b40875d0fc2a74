#include "swapnas/tensor.hpp"

#include <bit>
#include <charconv>
#include <cmath>
#include <cstring>
#include <fstream>
#include <random>
#include <sstream>

#include "swapnas/errors.hpp"
#include "swapnas/rng.hpp"

namespace swapnas {

InputBatch::InputBatch(int samples, Shape shape, std::vector<float> payload)
    : samples_(samples), shape_(shape), payload_(std::move(payload)) {
  if (samples_ < 1) throw ValidationError("input batch needs at least one sample");
  if (shape_.channels < 1 || shape_.width < 1 || shape_.height < 1)
    throw ValidationError("input batch dimensions must be positive");
  if (payload_.size() != static_cast<std::size_t>(samples_) * shape_.size())
    throw ValidationError("input batch payload length does not equal S*C*W*H");
  for (float v : payload_)
    if (!std::isfinite(v)) throw ValidationError("input batch contains a non-finite value");
}

InputBatch InputBatch::with_samples_permuted(std::span<const int> order) const {
  if (order.size() != static_cast<std::size_t>(samples_))
    throw ContractError("permutation length must equal the sample count");
  std::vector<float> out;
  out.reserve(payload_.size());
  for (int s : order) {
    auto src = sample(s);
    out.insert(out.end(), src.begin(), src.end());
  }
  InputBatch b(samples_, shape_, std::move(out));
  b.descriptor_ = descriptor_;
  return b;
}

namespace {

int parse_positive(std::string_view s, std::string_view what) {
  int v = 0;
  auto [p, ec] = std::from_chars(s.data(), s.data() + s.size(), v);
  if (ec != std::errc{} || p != s.data() + s.size() || v < 1)
    throw ValidationError("batch spec: bad " + std::string(what) + " '" + std::string(s) + "'");
  return v;
}

}  // namespace

std::string BatchSpec::to_string() const {
  std::ostringstream os;
  os << "gauss:" << samples << 'x' << channels << 'x' << width << 'x' << height;
  if (jitter > 0.0) os << '@' << jitter;
  return os.str();
}

BatchSpec BatchSpec::parse(std::string_view text) {
  constexpr std::string_view prefix = "gauss:";
  if (text.substr(0, prefix.size()) != prefix)
    throw ValidationError("batch spec must look like gauss:SxCxWxH, got '" + std::string(text) + "'");
  text.remove_prefix(prefix.size());
  BatchSpec spec;
  if (auto at = text.find('@'); at != std::string_view::npos) {
    const std::string eps(text.substr(at + 1));
    char* end = nullptr;
    spec.jitter = std::strtod(eps.c_str(), &end);
    if (eps.empty() || *end != '\0' || !(spec.jitter > 0.0) || !std::isfinite(spec.jitter))
      throw ValidationError("batch spec: jitter must be a positive number, got '" + eps + "'");
    text = text.substr(0, at);
  }
  int dims[4];
  for (int i = 0; i < 4; ++i) {
    auto x = text.find('x');
    if ((i < 3) != (x != std::string_view::npos))
      throw ValidationError("batch spec needs exactly four dimensions SxCxWxH");
    dims[i] = parse_positive(text.substr(0, x), i == 0 ? "sample count" : "dimension");
    text = i < 3 ? text.substr(x + 1) : std::string_view{};
  }
  spec.samples = dims[0];
  spec.channels = dims[1];
  spec.width = dims[2];
  spec.height = dims[3];
  return spec;
}

InputBatch make_gaussian_batch(const BatchSpec& spec, std::uint64_t seed) {
  const Shape shape{spec.channels, spec.height, spec.width};
  const std::size_t n = static_cast<std::size_t>(spec.samples) * shape.size();
  std::vector<float> payload(n);
  Rng rng(derive_seed(seed, 0x1a7b));
  std::normal_distribution<double> normal(0.0, 1.0);
  if (spec.jitter > 0.0) {
    std::vector<double> common(shape.size());
    for (double& c : common) c = normal(rng);
    for (std::size_t i = 0; i < n; ++i)
      payload[i] = static_cast<float>(common[i % shape.size()] + spec.jitter * normal(rng));
  } else {
    for (float& v : payload) v = static_cast<float>(normal(rng));
  }
  InputBatch batch(spec.samples, shape, std::move(payload));
  batch.set_descriptor(spec.to_string());
  return batch;
}

namespace {

std::uint32_t to_little_endian(std::uint32_t v) {
  if constexpr (std::endian::native == std::endian::big)
    return ((v & 0xffU) << 24) | ((v & 0xff00U) << 8) | ((v >> 8) & 0xff00U) | (v >> 24);
  return v;
}

}  // namespace

InputBatch read_tensor_file(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw ParseError("cannot open tensor file " + path.string());
  std::string header;
  std::getline(in, header);
  if (!header.empty() && header.back() == '\r') header.pop_back();
  std::istringstream hs(header);
  std::string magic, version;
  long long s = 0, c = 0, w = 0, h = 0;
  hs >> magic >> version >> s >> c >> w >> h;
  if (!hs || magic != "SWAPTENSOR" || version != "v1")
    throw ParseError("tensor file header must be 'SWAPTENSOR v1 S C W H'", 1);
  if (s < 1 || c < 1 || w < 1 || h < 1)
    throw ParseError("tensor file dimensions must be positive", 1);
  const std::size_t n = static_cast<std::size_t>(s * c * w * h);
  std::vector<float> payload(n);
  for (std::size_t i = 0; i < n; ++i) {
    std::uint32_t raw = 0;
    if (!in.read(reinterpret_cast<char*>(&raw), sizeof raw))
      throw ParseError("tensor file truncated: expected " + std::to_string(n) + " floats");
    payload[i] = std::bit_cast<float>(to_little_endian(raw));
  }
  if (in.peek() != std::char_traits<char>::eof())
    throw ParseError("tensor file has trailing bytes after the payload");
  InputBatch batch(static_cast<int>(s), Shape{static_cast<int>(c), static_cast<int>(h), static_cast<int>(w)},
                   std::move(payload));
  batch.set_descriptor("file:" + path.filename().string());
  return batch;
}

void write_tensor_file(const std::filesystem::path& path, const InputBatch& batch) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw Error("cannot write tensor file " + path.string());
  const Shape& sh = batch.shape();
  out << "SWAPTENSOR v1 " << batch.samples() << ' ' << sh.channels << ' ' << sh.width << ' '
      << sh.height << '\n';
  for (float v : batch.payload()) {
    const std::uint32_t raw = to_little_endian(std::bit_cast<std::uint32_t>(v));
    out.write(reinterpret_cast<const char*>(&raw), sizeof raw);
  }
  if (!out) throw Error("failed writing tensor file " + path.string());
}

}  // namespace swapnas
