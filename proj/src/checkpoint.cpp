#include "poseadapt/checkpoint.hpp"

#include <bit>
#include <cstdint>
#include <cstring>
#include <fstream>
#include <stdexcept>

static_assert(std::endian::native == std::endian::little,
              "checkpoint format assumes a little-endian host");

namespace poseadapt {

namespace {

constexpr char kMagic[8] = {'P', 'A', 'D', 'C', 'K', 'P', 'T', '1'};

uint64_t fnv1a(const char* data, size_t n, uint64_t h = 1469598103934665603ULL) {
  for (size_t i = 0; i < n; ++i) {
    h ^= static_cast<unsigned char>(data[i]);
    h *= 1099511628211ULL;
  }
  return h;
}

struct Writer {
  std::string buf;

  void raw(const void* p, size_t n) { buf.append(static_cast<const char*>(p), n); }
  void u32(uint32_t v) { raw(&v, sizeof v); }
  void u64(uint64_t v) { raw(&v, sizeof v); }
  void str(const std::string& s) {
    u32(static_cast<uint32_t>(s.size()));
    raw(s.data(), s.size());
  }
};

struct Reader {
  const char* p;
  const char* end;

  void raw(void* out, size_t n) {
    if (static_cast<size_t>(end - p) < n) {
      throw std::runtime_error("checkpoint: corrupt file (truncated)");
    }
    std::memcpy(out, p, n);
    p += n;
  }
  uint32_t u32() {
    uint32_t v;
    raw(&v, sizeof v);
    return v;
  }
  uint64_t u64() {
    uint64_t v;
    raw(&v, sizeof v);
    return v;
  }
  std::string str() {
    const uint32_t n = u32();
    if (static_cast<size_t>(end - p) < n) {
      throw std::runtime_error("checkpoint: corrupt file (truncated string)");
    }
    std::string s(p, n);
    p += n;
    return s;
  }
};

}  // namespace

const CheckpointBlock& Checkpoint::block(const std::string& name) const {
  for (const auto& b : blocks) {
    if (b.name == name) return b;
  }
  throw std::out_of_range("checkpoint: no block named " + name);
}

bool Checkpoint::has_block(const std::string& name) const {
  for (const auto& b : blocks) {
    if (b.name == name) return true;
  }
  return false;
}

std::string Checkpoint::meta_value(const std::string& key) const {
  for (const auto& [k, v] : meta) {
    if (k == key) return v;
  }
  throw std::out_of_range("checkpoint: no metadata key " + key);
}

void Checkpoint::add_params(const ParamSet& params) {
  for (size_t i = 0; i < params.size(); ++i) {
    const Tensor& t = params.tensor(i);
    blocks.push_back({params.name(i), t.dims(),
                      std::vector<double>(t.data().begin(), t.data().end())});
  }
}

void Checkpoint::add_adam(const AdamState& state, const ParamSet& params) {
  meta.emplace_back("adam.step", std::to_string(state.step));
  for (size_t i = 0; i < params.size(); ++i) {
    const auto dims = params.tensor(i).dims();
    blocks.push_back({"adam.m." + params.name(i), dims, state.m[i]});
    blocks.push_back({"adam.v." + params.name(i), dims, state.v[i]});
  }
}

void write_checkpoint(const Checkpoint& ckpt, const std::string& path) {
  Writer w;
  w.str(ckpt.config_echo);
  w.u32(static_cast<uint32_t>(ckpt.meta.size()));
  for (const auto& [k, v] : ckpt.meta) {
    w.str(k);
    w.str(v);
  }
  w.u32(static_cast<uint32_t>(ckpt.blocks.size()));
  for (const auto& b : ckpt.blocks) {
    w.str(b.name);
    w.u32(static_cast<uint32_t>(b.dims.size()));
    int64_t n = 1;
    for (int d : b.dims) {
      w.u32(static_cast<uint32_t>(d));
      n *= d;
    }
    if (n != static_cast<int64_t>(b.data.size())) {
      throw std::invalid_argument("checkpoint: block dims do not match data: " + b.name);
    }
    w.raw(b.data.data(), b.data.size() * sizeof(double));
  }

  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw std::runtime_error("checkpoint: cannot open for writing: " + path);
  out.write(kMagic, sizeof kMagic);
  out.write(w.buf.data(), static_cast<std::streamsize>(w.buf.size()));
  const uint64_t sum = fnv1a(w.buf.data(), w.buf.size());
  out.write(reinterpret_cast<const char*>(&sum), sizeof sum);
  if (!out) throw std::runtime_error("checkpoint: write failed: " + path);
}

Checkpoint read_checkpoint(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw std::runtime_error("checkpoint: cannot open: " + path);
  std::string bytes((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());

  if (bytes.size() < sizeof kMagic + sizeof(uint64_t) ||
      std::memcmp(bytes.data(), kMagic, sizeof kMagic) != 0) {
    throw std::runtime_error("checkpoint: version mismatch or not a checkpoint: " + path);
  }
  const size_t body = bytes.size() - sizeof kMagic - sizeof(uint64_t);
  uint64_t stored;
  std::memcpy(&stored, bytes.data() + sizeof kMagic + body, sizeof stored);
  if (fnv1a(bytes.data() + sizeof kMagic, body) != stored) {
    throw std::runtime_error("checkpoint: corrupt file (checksum mismatch): " + path);
  }

  Reader r{bytes.data() + sizeof kMagic, bytes.data() + sizeof kMagic + body};
  Checkpoint ckpt;
  ckpt.config_echo = r.str();
  const uint32_t nmeta = r.u32();
  for (uint32_t i = 0; i < nmeta; ++i) {
    auto k = r.str();
    auto v = r.str();
    ckpt.meta.emplace_back(std::move(k), std::move(v));
  }
  const uint32_t nblocks = r.u32();
  for (uint32_t i = 0; i < nblocks; ++i) {
    CheckpointBlock b;
    b.name = r.str();
    const uint32_t rank = r.u32();
    int64_t n = 1;
    for (uint32_t d = 0; d < rank; ++d) {
      b.dims.push_back(static_cast<int>(r.u32()));
      n *= b.dims.back();
    }
    b.data.resize(n);
    r.raw(b.data.data(), static_cast<size_t>(n) * sizeof(double));
    ckpt.blocks.push_back(std::move(b));
  }
  if (r.p != r.end) throw std::runtime_error("checkpoint: corrupt file (trailing bytes)");
  return ckpt;
}

}  // namespace poseadapt
