#pragma once

#include "caai/surrogates/dataset.hpp"

#include <cstdint>
#include <cstring>
#include <string_view>
#include <type_traits>
#include <vector>

namespace caai::surrogates::detail {

class ByteWriter {
 public:
  template <typename T>
    requires std::is_trivially_copyable_v<T>
  void put(const T& v) {
    const auto* p = reinterpret_cast<const std::uint8_t*>(&v);
    bytes_.insert(bytes_.end(), p, p + sizeof(T));
  }

  void put_tag(std::string_view tag) { bytes_.insert(bytes_.end(), tag.begin(), tag.end()); }

  std::vector<std::uint8_t> take() { return std::move(bytes_); }

 private:
  std::vector<std::uint8_t> bytes_;
};

class ByteReader {
 public:
  explicit ByteReader(const std::vector<std::uint8_t>& bytes) : bytes_(bytes) {}

  template <typename T>
    requires std::is_trivially_copyable_v<T>
  T get() {
    if (pos_ + sizeof(T) > bytes_.size()) throw SurrogateError("truncated model blob");
    T v;
    std::memcpy(&v, bytes_.data() + pos_, sizeof(T));
    pos_ += sizeof(T);
    return v;
  }

  void expect_tag(std::string_view tag) {
    if (pos_ + tag.size() > bytes_.size() ||
        std::memcmp(bytes_.data() + pos_, tag.data(), tag.size()) != 0)
      throw SurrogateError("model blob has wrong tag");
    pos_ += tag.size();
  }

  bool done() const { return pos_ == bytes_.size(); }

 private:
  const std::vector<std::uint8_t>& bytes_;
  std::size_t pos_ = 0;
};

}  // namespace caai::surrogates::detail
