#include "svs/checkpoint.h"

#include <cstdint>
#include <cstring>
#include <fstream>

#include "svs/errors.h"

namespace svs {

namespace {

constexpr char kMagic[8] = {'S', 'V', 'S', 'N', 'A', 'P', '0', '1'};

void write_u64(std::ostream& out, uint64_t v) {
  char buf[8];
  std::memcpy(buf, &v, 8);
  out.write(buf, 8);
}

uint64_t read_u64(std::istream& in) {
  char buf[8];
  in.read(buf, 8);
  if (!in) throw IoError("checkpoint: truncated file");
  uint64_t v;
  std::memcpy(&v, buf, 8);
  return v;
}

}  // namespace

void save_snapshot(const std::string& path, const Snapshot& snap) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw IoError("checkpoint: cannot open " + path + " for writing");
  out.write(kMagic, 8);
  write_u64(out, snap.meta_json.size());
  out.write(snap.meta_json.data(), static_cast<std::streamsize>(snap.meta_json.size()));
  write_u64(out, snap.tensors.size());
  for (const auto& [name, t] : snap.tensors) {
    write_u64(out, name.size());
    out.write(name.data(), static_cast<std::streamsize>(name.size()));
    write_u64(out, static_cast<uint64_t>(t.rank()));
    for (int i = 0; i < t.rank(); ++i) write_u64(out, static_cast<uint64_t>(t.dim(i)));
    out.write(reinterpret_cast<const char*>(t.data()),
              static_cast<std::streamsize>(t.size() * sizeof(double)));
  }
  if (!out) throw IoError("checkpoint: write to " + path + " failed");
}

Snapshot load_snapshot(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("checkpoint: cannot open " + path);
  char magic[8];
  in.read(magic, 8);
  if (!in || std::memcmp(magic, kMagic, 8) != 0)
    throw DataError("checkpoint: " + path + " is not a snapshot file");

  Snapshot snap;
  uint64_t meta_len = read_u64(in);
  if (meta_len > (uint64_t{1} << 30)) throw DataError("checkpoint: corrupt metadata length");
  snap.meta_json.resize(meta_len);
  in.read(snap.meta_json.data(), static_cast<std::streamsize>(meta_len));
  if (!in) throw IoError("checkpoint: truncated file");

  uint64_t n_tensors = read_u64(in);
  if (n_tensors > (uint64_t{1} << 24)) throw DataError("checkpoint: corrupt tensor count");
  snap.tensors.reserve(n_tensors);
  for (uint64_t i = 0; i < n_tensors; ++i) {
    uint64_t name_len = read_u64(in);
    if (name_len > (uint64_t{1} << 16)) throw DataError("checkpoint: corrupt tensor name");
    std::string name(name_len, '\0');
    in.read(name.data(), static_cast<std::streamsize>(name_len));
    uint64_t rank = read_u64(in);
    if (rank > 4) throw DataError("checkpoint: corrupt tensor rank");
    std::vector<int64_t> shape(rank);
    for (uint64_t d = 0; d < rank; ++d) {
      shape[d] = static_cast<int64_t>(read_u64(in));
      if (shape[d] < 0 || shape[d] > (int64_t{1} << 32))
        throw DataError("checkpoint: corrupt tensor shape");
    }
    Tensor t(shape);
    in.read(reinterpret_cast<char*>(t.data()),
            static_cast<std::streamsize>(t.size() * sizeof(double)));
    if (!in) throw IoError("checkpoint: truncated file");
    snap.tensors.emplace_back(std::move(name), std::move(t));
  }
  return snap;
}

}  // namespace svs
