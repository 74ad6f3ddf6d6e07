#include "relcap/checkpoint.hpp"

#include "relcap/errors.hpp"
#include "relcap/io.hpp"

#include <algorithm>
#include <bit>
#include <cstring>
#include <type_traits>

namespace relcap {

namespace {

constexpr char kMagic[8] = {'R', 'E', 'L', 'C', 'A', 'P', 'C', 'K'};

template <typename T>
void put(std::string& out, T v) {
  static_assert(std::is_trivially_copyable_v<T>);
  unsigned char buf[sizeof(T)];
  std::memcpy(buf, &v, sizeof(T));
  if constexpr (std::endian::native == std::endian::big) std::reverse(buf, buf + sizeof(T));
  out.append(reinterpret_cast<const char*>(buf), sizeof(T));
}

class Reader {
 public:
  explicit Reader(std::string_view bytes) : bytes_(bytes) {}

  template <typename T>
  T get(const char* what) {
    need(sizeof(T), what);
    unsigned char buf[sizeof(T)];
    std::memcpy(buf, bytes_.data() + pos_, sizeof(T));
    if constexpr (std::endian::native == std::endian::big) std::reverse(buf, buf + sizeof(T));
    pos_ += sizeof(T);
    T v;
    std::memcpy(&v, buf, sizeof(T));
    return v;
  }

  std::string_view take(std::size_t n, const char* what) {
    need(n, what);
    auto s = bytes_.substr(pos_, n);
    pos_ += n;
    return s;
  }

  std::size_t pos() const { return pos_; }

 private:
  void need(std::size_t n, const char* what) const {
    if (bytes_.size() - pos_ < n) throw DataError(std::string("checkpoint truncated while reading ") + what);
  }
  std::string_view bytes_;
  std::size_t pos_ = 0;
};

}  // namespace

const Tensor* Checkpoint::find(const std::string& name) const {
  for (const auto& [n, t] : tensors) {
    if (n == name) return &t;
  }
  return nullptr;
}

std::string encode_checkpoint(const Checkpoint& ckpt) {
  std::string out(kMagic, sizeof kMagic);
  put<std::uint32_t>(out, kCheckpointVersion);
  const std::string meta = ckpt.meta.dump();
  put<std::uint64_t>(out, meta.size());
  out += meta;
  put<std::uint32_t>(out, static_cast<std::uint32_t>(ckpt.tensors.size()));
  for (const auto& [name, t] : ckpt.tensors) {
    put<std::uint32_t>(out, static_cast<std::uint32_t>(name.size()));
    out += name;
    put<std::uint32_t>(out, 2);
    put<std::uint64_t>(out, static_cast<std::uint64_t>(t.rows()));
    put<std::uint64_t>(out, static_cast<std::uint64_t>(t.cols()));
    for (Eigen::Index i = 0; i < t.size(); ++i) put<double>(out, t.data()[i]);
  }
  put<std::uint64_t>(out, io::fnv1a(out));
  return out;
}

Checkpoint decode_checkpoint(std::string_view bytes) {
  Reader r(bytes);
  if (r.take(sizeof kMagic, "magic") != std::string_view(kMagic, sizeof kMagic)) {
    throw DataError("not a checkpoint file (bad magic)");
  }
  const auto version = r.get<std::uint32_t>("version");
  if (version != kCheckpointVersion) {
    throw DataError("unsupported checkpoint format version " + std::to_string(version) + " (expected " +
                    std::to_string(kCheckpointVersion) + ")");
  }
  if (bytes.size() < sizeof(std::uint64_t)) throw DataError("checkpoint truncated");
  const std::string_view body = bytes.substr(0, bytes.size() - sizeof(std::uint64_t));
  Reader tail(bytes.substr(body.size()));
  if (tail.get<std::uint64_t>("checksum") != io::fnv1a(body)) throw DataError("checkpoint checksum mismatch");

  Checkpoint ckpt;
  const auto meta_len = r.get<std::uint64_t>("metadata length");
  try {
    ckpt.meta = nlohmann::json::parse(r.take(meta_len, "metadata"));
  } catch (const nlohmann::json::exception& e) {
    throw DataError(std::string("checkpoint metadata is not valid JSON: ") + e.what());
  }
  const auto count = r.get<std::uint32_t>("tensor count");
  for (std::uint32_t k = 0; k < count; ++k) {
    const auto name_len = r.get<std::uint32_t>("name length");
    std::string name(r.take(name_len, "tensor name"));
    const auto ndims = r.get<std::uint32_t>("rank");
    if (ndims != 2) throw DataError("tensor '" + name + "' has unsupported rank " + std::to_string(ndims));
    const auto rows = r.get<std::uint64_t>("extent");
    const auto cols = r.get<std::uint64_t>("extent");
    if (rows != 0 && cols > (body.size() - r.pos()) / sizeof(double) / rows) {
      throw DataError("checkpoint truncated in tensor '" + name + "'");
    }
    Tensor t(static_cast<Eigen::Index>(rows), static_cast<Eigen::Index>(cols));
    for (Eigen::Index i = 0; i < t.size(); ++i) t.data()[i] = r.get<double>("payload");
    ckpt.tensors.emplace_back(std::move(name), std::move(t));
  }
  if (r.pos() != body.size()) throw DataError("trailing bytes in checkpoint");
  return ckpt;
}

void save_checkpoint(const std::filesystem::path& path, const Checkpoint& ckpt) {
  io::write_file_atomic(path, encode_checkpoint(ckpt));
}

Checkpoint load_checkpoint(const std::filesystem::path& path) { return decode_checkpoint(io::read_file(path)); }

}  // namespace relcap
