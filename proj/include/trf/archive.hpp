#ifndef TRF_ARCHIVE_HPP
#define TRF_ARCHIVE_HPP

#include <map>
#include <span>
#include <stdexcept>
#include <string>
#include <string_view>
#include <vector>

namespace trf {

class ArchiveError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};
class ArchiveVersionError : public ArchiveError {
 public:
  using ArchiveError::ArchiveError;
};
class ArchiveChecksumError : public ArchiveError {
 public:
  using ArchiveError::ArchiveError;
};

// Container for model files: a text manifest of named text blocks and
// declared arrays, then the arrays as raw little-endian float64, then a
// CRC-32 trailer over everything before it.
//
//   TRFARCHIVE <version> <kind>
//   text <name> <nbytes>
//   <nbytes of text>
//   array <name> <ndims> <dim>...
//   payload <nbytes>
//   <raw doubles, arrays in declaration order>
//   crc32 <8 hex digits>
class Archive {
 public:
  static constexpr int kVersion = 1;

  struct Array {
    std::vector<std::size_t> shape;
    std::vector<double> values;
  };

  explicit Archive(std::string kind = "") : kind_(std::move(kind)) {}

  const std::string& kind() const { return kind_; }

  void put_text(const std::string& name, std::string text);
  void put_array(const std::string& name, std::vector<std::size_t> shape,
                 std::span<const double> values);

  bool has_text(const std::string& name) const { return texts_.count(name); }
  bool has_array(const std::string& name) const { return arrays_.count(name); }
  const std::string& text(const std::string& name) const;
  const Array& array(const std::string& name) const;

  std::string serialize() const;
  // Throws ArchiveVersionError for newer formats, ArchiveChecksumError on
  // CRC mismatch, ArchiveError for truncated or malformed input.
  static Archive parse(std::string_view bytes, const std::string& expected_kind);

  void save(const std::string& path) const;
  static Archive load(const std::string& path, const std::string& expected_kind);

 private:
  std::string kind_;
  std::vector<std::string> text_order_, array_order_;
  std::map<std::string, std::string> texts_;
  std::map<std::string, Array> arrays_;
};

}  // namespace trf

#endif  // TRF_ARCHIVE_HPP
