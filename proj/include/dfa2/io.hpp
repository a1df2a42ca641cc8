#pragma once

#include <iosfwd>
#include <string>

#include "dfa2/tensor.hpp"

namespace dfa2 {

// "DFA2" binary tensor dump: magic bytes DFA2, u32 version (=1), u32 dtype
// code (0=f32, 1=f64), u32 ndim, ndim x u64 dims, then raw little-endian
// row-major scalars. Bit-exact round trip.
void write_dfa2(std::ostream& out, const Tensor& tensor);
Tensor read_dfa2(std::istream& in);

void save_dfa2(const Tensor& tensor, const std::string& path);
Tensor load_dfa2(const std::string& path);

} // namespace dfa2
