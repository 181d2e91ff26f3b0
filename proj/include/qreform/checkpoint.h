#ifndef QREFORM_CHECKPOINT_H_
#define QREFORM_CHECKPOINT_H_

#include <cstdint>
#include <iosfwd>
#include <map>
#include <string>
#include <utility>
#include <vector>

#include "qreform/tensor.h"

namespace qreform {

// Flat tensor container. Layout (all integers little-endian):
//   magic "QRFCKPT\0", u32 version
//   u32 n_meta,    n_meta x (u32 len, key bytes, u32 len, value bytes)
//   u32 n_tensors, n_tensors x (u32 len, path bytes, u32 ndim, ndim x u64 dim,
//                               prod(dims) x f64 little-endian, row-major)
struct Checkpoint {
  static constexpr std::uint32_t kVersion = 1;

  std::map<std::string, std::string> meta;
  std::vector<std::pair<std::string, Matrix>> tensors;

  const Matrix* find(const std::string& path) const;

  void write(std::ostream& out) const;
  static Checkpoint read(std::istream& in);
  void save(const std::string& path) const;
  static Checkpoint load(const std::string& path);
};

}  // namespace qreform

#endif  // QREFORM_CHECKPOINT_H_
