#include "trf/archive.hpp"

#include <bit>
#include <cstdint>
#include <cstdio>
#include <cstring>
#include <fstream>
#include <iterator>
#include <sstream>

#include <zlib.h>

namespace trf {

namespace {

std::uint32_t crc_of(std::string_view bytes) {
  uLong crc = crc32(0L, Z_NULL, 0);
  // zlib takes uInt lengths; feed in chunks.
  std::size_t pos = 0;
  while (pos < bytes.size()) {
    std::size_t n = std::min<std::size_t>(bytes.size() - pos, 1u << 30);
    crc = crc32(crc, reinterpret_cast<const Bytef*>(bytes.data() + pos),
                static_cast<uInt>(n));
    pos += n;
  }
  return static_cast<std::uint32_t>(crc);
}

void append_le(std::string& out, double v) {
  std::uint64_t bits = std::bit_cast<std::uint64_t>(v);
  if constexpr (std::endian::native == std::endian::big)
    bits = __builtin_bswap64(bits);
  char buf[8];
  std::memcpy(buf, &bits, 8);
  out.append(buf, 8);
}

double read_le(const char* p) {
  std::uint64_t bits;
  std::memcpy(&bits, p, 8);
  if constexpr (std::endian::native == std::endian::big)
    bits = __builtin_bswap64(bits);
  return std::bit_cast<double>(bits);
}

bool valid_name(const std::string& name) {
  if (name.empty()) return false;
  for (char c : name)
    if (c == ' ' || c == '\n' || c == '\t') return false;
  return true;
}

// Cursor over the manifest that reports truncation uniformly.
struct Reader {
  std::string_view data;
  std::size_t pos = 0;

  std::string line() {
    auto nl = data.find('\n', pos);
    if (nl == std::string_view::npos) throw ArchiveError("archive truncated");
    std::string out(data.substr(pos, nl - pos));
    pos = nl + 1;
    return out;
  }
  std::string_view take(std::size_t n) {
    if (data.size() - pos < n) throw ArchiveError("archive truncated");
    auto out = data.substr(pos, n);
    pos += n;
    return out;
  }
};

}  // namespace

void Archive::put_text(const std::string& name, std::string text) {
  if (!valid_name(name)) throw ArchiveError("bad archive entry name");
  if (!texts_.count(name)) text_order_.push_back(name);
  texts_[name] = std::move(text);
}

void Archive::put_array(const std::string& name, std::vector<std::size_t> shape,
                        std::span<const double> values) {
  if (!valid_name(name)) throw ArchiveError("bad archive entry name");
  std::size_t n = 1;
  for (auto s : shape) n *= s;
  if (n != values.size())
    throw ArchiveError("array " + name + ": shape does not match value count");
  if (!arrays_.count(name)) array_order_.push_back(name);
  arrays_[name] = Array{std::move(shape), {values.begin(), values.end()}};
}

const std::string& Archive::text(const std::string& name) const {
  auto it = texts_.find(name);
  if (it == texts_.end()) throw ArchiveError("archive has no text " + name);
  return it->second;
}

const Archive::Array& Archive::array(const std::string& name) const {
  auto it = arrays_.find(name);
  if (it == arrays_.end()) throw ArchiveError("archive has no array " + name);
  return it->second;
}

std::string Archive::serialize() const {
  std::ostringstream head;
  head << "TRFARCHIVE " << kVersion << ' ' << kind_ << '\n';
  for (const auto& name : text_order_) {
    const auto& t = texts_.at(name);
    head << "text " << name << ' ' << t.size() << '\n' << t << '\n';
  }
  std::size_t payload_bytes = 0;
  for (const auto& name : array_order_) {
    const auto& a = arrays_.at(name);
    head << "array " << name << ' ' << a.shape.size();
    for (auto s : a.shape) head << ' ' << s;
    head << '\n';
    payload_bytes += 8 * a.values.size();
  }
  head << "payload " << payload_bytes << '\n';
  std::string out = head.str();
  out.reserve(out.size() + payload_bytes + 32);
  for (const auto& name : array_order_)
    for (double v : arrays_.at(name).values) append_le(out, v);
  char trailer[32];
  std::snprintf(trailer, sizeof trailer, "crc32 %08x\n", crc_of(out));
  out += trailer;
  return out;
}

Archive Archive::parse(std::string_view bytes, const std::string& expected_kind) {
  Reader r{bytes};
  std::istringstream magic(r.line());
  std::string tag, kind;
  int version = 0;
  if (!(magic >> tag >> version) || tag != "TRFARCHIVE")
    throw ArchiveError("not a model archive");
  if (version > kVersion)
    throw ArchiveVersionError("archive format version " +
                              std::to_string(version) +
                              " is newer than supported version " +
                              std::to_string(kVersion));
  if (version < 1) throw ArchiveError("bad archive version");
  magic >> kind;
  if (!expected_kind.empty() && kind != expected_kind)
    throw ArchiveError("archive holds a '" + kind + "', expected '" +
                       expected_kind + "'");

  // Trailer: the final line "crc32 xxxxxxxx".
  constexpr std::size_t kTrailer = 15;
  if (bytes.size() < kTrailer || bytes.back() != '\n' ||
      bytes.substr(bytes.size() - kTrailer, 6) != "crc32 ")
    throw ArchiveError("archive truncated: missing checksum trailer");
  const std::string_view body = bytes.substr(0, bytes.size() - kTrailer);
  unsigned long stored = 0;
  try {
    std::size_t used = 0;
    stored = std::stoul(std::string(bytes.substr(bytes.size() - 9, 8)), &used, 16);
    if (used != 8) throw std::invalid_argument("");
  } catch (const std::exception&) {
    throw ArchiveError("archive truncated: malformed checksum trailer");
  }
  if (crc_of(body) != stored)
    throw ArchiveChecksumError("archive checksum mismatch: file is corrupt");

  Archive ar(kind);
  r.data = body;
  struct Decl {
    std::string name;
    std::vector<std::size_t> shape;
  };
  std::vector<Decl> decls;
  for (;;) {
    std::istringstream ls(r.line());
    std::string what;
    ls >> what;
    if (what == "text") {
      std::string name;
      std::size_t n = 0;
      if (!(ls >> name >> n)) throw ArchiveError("malformed text entry");
      std::string value(r.take(n));
      if (r.take(1) != "\n") throw ArchiveError("malformed text entry");
      ar.put_text(name, std::move(value));
    } else if (what == "array") {
      Decl d;
      std::size_t ndim = 0;
      if (!(ls >> d.name >> ndim)) throw ArchiveError("malformed array entry");
      d.shape.resize(ndim);
      for (auto& s : d.shape)
        if (!(ls >> s)) throw ArchiveError("malformed array entry");
      decls.push_back(std::move(d));
    } else if (what == "payload") {
      std::size_t n = 0;
      if (!(ls >> n)) throw ArchiveError("malformed payload header");
      std::size_t expected = 0;
      for (const auto& d : decls) {
        std::size_t count = 1;
        for (auto s : d.shape) count *= s;
        expected += 8 * count;
      }
      if (n != expected || body.size() - r.pos != n)
        throw ArchiveError("archive payload size mismatch");
      break;
    } else {
      throw ArchiveError("unexpected archive entry '" + what + "'");
    }
  }
  for (const auto& d : decls) {
    std::size_t count = 1;
    for (auto s : d.shape) count *= s;
    auto raw = r.take(8 * count);
    std::vector<double> values(count);
    for (std::size_t i = 0; i < count; ++i) values[i] = read_le(raw.data() + 8 * i);
    ar.put_array(d.name, d.shape, values);
  }
  return ar;
}

void Archive::save(const std::string& path) const {
  const std::string bytes = serialize();
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw ArchiveError("cannot write " + path);
  out.write(bytes.data(), static_cast<std::streamsize>(bytes.size()));
  if (!out) throw ArchiveError("write failed for " + path);
}

Archive Archive::load(const std::string& path, const std::string& expected_kind) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw ArchiveError("cannot open " + path);
  std::string bytes((std::istreambuf_iterator<char>(in)),
                    std::istreambuf_iterator<char>());
  return parse(bytes, expected_kind);
}

}  // namespace trf
