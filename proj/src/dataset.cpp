#include "poseadapt/dataset.hpp"

#include <bit>
#include <cstring>
#include <filesystem>
#include <fstream>
#include <stdexcept>

static_assert(std::endian::native == std::endian::little,
              "dataset format assumes a little-endian host");

namespace poseadapt {

namespace {

constexpr char kMagic[8] = {'P', 'A', 'D', 'D', 'A', 'T', 'A', '1'};

uint64_t fnv1a(const char* data, size_t n, uint64_t h = 1469598103934665603ULL) {
  for (size_t i = 0; i < n; ++i) {
    h ^= static_cast<unsigned char>(data[i]);
    h *= 1099511628211ULL;
  }
  return h;
}

}  // namespace

KeyValues DatasetManifest::to_kv() const {
  KeyValues kv;
  kv.set_int("version", version);
  kv.set_int("keypoints", num_keypoints);
  kv.set_int("channels", channels);
  kv.set_int("image_size", image_size);
  kv.set_int("m", m);
  kv.set_int("n1", n1);
  kv.set_int("n2", n2);
  kv.set("mode", mode);
  kv.set("seed", std::to_string(seed));
  kv.set("style_source", style_source);
  kv.set("style_target", style_target);
  return kv;
}

DatasetManifest DatasetManifest::from_kv(const KeyValues& kv) {
  DatasetManifest m;
  m.version = kv.get_int("version", 0);
  m.num_keypoints = kv.get_int("keypoints", 0);
  m.channels = kv.get_int("channels", 0);
  m.image_size = kv.get_int("image_size", 0);
  m.m = kv.get_int("m", 0);
  m.n1 = kv.get_int("n1", 0);
  m.n2 = kv.get_int("n2", 0);
  m.mode = kv.get_or("mode", "uda");
  m.seed = kv.get_u64("seed", 0);
  m.style_source = kv.get_or("style_source", "");
  m.style_target = kv.get_or("style_target", "");
  return m;
}

void DatasetManifest::validate() const {
  if (version != 1) throw std::runtime_error("dataset: unsupported manifest version");
  if (m < 0 || n1 < 0 || n2 < 0) throw std::runtime_error("dataset: negative counts");
  if (mode != "uda" && mode != "ssda") {
    throw std::runtime_error("dataset: mode must be uda or ssda, got " + mode);
  }
  if (mode == "uda" && n1 > 0) {
    throw std::runtime_error("dataset: uda mode requires n1 = 0");
  }
  if (num_keypoints <= 0 || channels <= 0 || image_size <= 0) {
    throw std::runtime_error("dataset: invalid sample geometry");
  }
}

std::vector<int> Dataset::source_indices() const {
  std::vector<int> idx(manifest.m);
  for (int i = 0; i < manifest.m; ++i) idx[i] = i;
  return idx;
}

std::vector<int> Dataset::target_labeled_indices() const {
  std::vector<int> idx(manifest.n1);
  for (int i = 0; i < manifest.n1; ++i) idx[i] = manifest.m + i;
  return idx;
}

std::vector<int> Dataset::target_unlabeled_indices() const {
  std::vector<int> idx(manifest.n2);
  for (int i = 0; i < manifest.n2; ++i) idx[i] = manifest.m + manifest.n1 + i;
  return idx;
}

void write_dataset(const Dataset& ds, const std::string& dir) {
  ds.manifest.validate();
  if (static_cast<int>(ds.samples.size()) != ds.manifest.m + ds.manifest.n1 + ds.manifest.n2) {
    throw std::runtime_error("dataset: sample count does not match manifest");
  }
  std::filesystem::create_directories(dir);
  write_kv_file(ds.manifest.to_kv(), dir + "/manifest.txt");

  std::string buf;
  auto raw = [&buf](const void* p, size_t n) { buf.append(static_cast<const char*>(p), n); };
  const uint32_t count = static_cast<uint32_t>(ds.samples.size());
  raw(&count, sizeof count);
  for (const auto& s : ds.samples) {
    const uint16_t k = static_cast<uint16_t>(s.keypoints.size());
    const uint16_t c = static_cast<uint16_t>(s.image.channels);
    const uint16_t h = static_cast<uint16_t>(s.image.height);
    const uint16_t w = static_cast<uint16_t>(s.image.width);
    if (s.visibility.size() != s.keypoints.size()) {
      throw std::runtime_error("dataset: visibility/keypoint length mismatch");
    }
    const uint32_t payload = 2 + 8 + static_cast<uint32_t>(k) +
                             static_cast<uint32_t>(k) * 16 +
                             static_cast<uint32_t>(c) * h * w * 4;
    raw(&payload, sizeof payload);
    const uint8_t domain = static_cast<uint8_t>(s.domain);
    const uint8_t labeled = s.labeled ? 1 : 0;
    raw(&domain, 1);
    raw(&labeled, 1);
    raw(&k, 2);
    raw(&c, 2);
    raw(&h, 2);
    raw(&w, 2);
    raw(s.visibility.data(), s.visibility.size());
    for (const auto& kp : s.keypoints) {
      raw(&kp.x, 8);
      raw(&kp.y, 8);
    }
    raw(s.image.pixels.data(), s.image.pixels.size() * 4);
  }

  std::ofstream out(dir + "/records.bin", std::ios::binary | std::ios::trunc);
  if (!out) throw std::runtime_error("dataset: cannot write " + dir + "/records.bin");
  out.write(kMagic, sizeof kMagic);
  out.write(buf.data(), static_cast<std::streamsize>(buf.size()));
  const uint64_t sum = fnv1a(buf.data(), buf.size());
  out.write(reinterpret_cast<const char*>(&sum), sizeof sum);
  if (!out) throw std::runtime_error("dataset: write failed");
}

Dataset read_dataset(const std::string& dir) {
  Dataset ds;
  ds.manifest = DatasetManifest::from_kv(parse_kv_file(dir + "/manifest.txt"));
  ds.manifest.validate();

  std::ifstream in(dir + "/records.bin", std::ios::binary);
  if (!in) throw std::runtime_error("dataset: cannot open " + dir + "/records.bin");
  std::string bytes((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());
  if (bytes.size() < sizeof kMagic + sizeof(uint64_t) ||
      std::memcmp(bytes.data(), kMagic, sizeof kMagic) != 0) {
    throw std::runtime_error("dataset: corrupt record file (bad magic or truncated)");
  }
  const size_t body = bytes.size() - sizeof kMagic - sizeof(uint64_t);
  uint64_t stored;
  std::memcpy(&stored, bytes.data() + sizeof kMagic + body, sizeof stored);
  if (fnv1a(bytes.data() + sizeof kMagic, body) != stored) {
    throw std::runtime_error("dataset: corrupt record file (checksum mismatch)");
  }

  const char* p = bytes.data() + sizeof kMagic;
  const char* end = p + body;
  auto pull = [&p, end](void* out, size_t n) {
    if (static_cast<size_t>(end - p) < n) {
      throw std::runtime_error("dataset: corrupt record (truncated)");
    }
    std::memcpy(out, p, n);
    p += n;
  };

  uint32_t count = 0;
  pull(&count, sizeof count);
  if (static_cast<int>(count) != ds.manifest.m + ds.manifest.n1 + ds.manifest.n2) {
    throw std::runtime_error("dataset: record count does not match manifest");
  }
  ds.samples.resize(count);
  int n_source = 0, n_tl = 0, n_tu = 0;
  for (auto& s : ds.samples) {
    uint32_t payload = 0;
    pull(&payload, sizeof payload);
    const char* record_start = p;
    uint8_t domain = 0, labeled = 0;
    uint16_t k = 0, c = 0, h = 0, w = 0;
    pull(&domain, 1);
    pull(&labeled, 1);
    pull(&k, 2);
    pull(&c, 2);
    pull(&h, 2);
    pull(&w, 2);
    if (k != ds.manifest.num_keypoints || c != ds.manifest.channels ||
        h != ds.manifest.image_size || w != ds.manifest.image_size) {
      throw std::runtime_error("dataset: record geometry does not match manifest");
    }
    s.domain = static_cast<DomainTag>(domain);
    s.labeled = labeled != 0;
    s.visibility.resize(k);
    pull(s.visibility.data(), k);
    s.keypoints.resize(k);
    for (auto& kp : s.keypoints) {
      pull(&kp.x, 8);
      pull(&kp.y, 8);
    }
    s.image.channels = c;
    s.image.height = h;
    s.image.width = w;
    s.image.pixels.resize(static_cast<size_t>(c) * h * w);
    pull(s.image.pixels.data(), s.image.pixels.size() * 4);
    if (static_cast<uint32_t>(p - record_start) != payload) {
      throw std::runtime_error("dataset: corrupt record (payload length mismatch)");
    }
    if (s.domain == DomainTag::kSource) {
      ++n_source;
    } else if (s.labeled) {
      ++n_tl;
    } else {
      ++n_tu;
    }
  }
  if (p != end) throw std::runtime_error("dataset: corrupt record file (trailing bytes)");
  if (n_source != ds.manifest.m || n_tl != ds.manifest.n1 || n_tu != ds.manifest.n2) {
    throw std::runtime_error("dataset: per-split counts do not match manifest");
  }
  return ds;
}

}  // namespace poseadapt
