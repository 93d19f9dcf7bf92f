#pragma once

// "T4 v1" text format. First line: `T4 J1 J2 K1 K2 field` with field real or
// complex; then the entries of the unfolded matrix in column-major order (row
// index fastest), one per line, complex entries as `re im`.

#include <iosfwd>
#include <string>

#include "mlti/tensor.hpp"

namespace mlti {

void write_t4(std::ostream& os, const Tensor4d& t);
void write_t4(std::ostream& os, const Tensor4c& t);

// A real reader rejects complex files; the complex reader accepts both.
Tensor4d read_t4_real(std::istream& is);
Tensor4c read_t4_complex(std::istream& is);

void save_t4(const std::string& path, const Tensor4d& t);
void save_t4(const std::string& path, const Tensor4c& t);
Tensor4d load_t4_real(const std::string& path);
Tensor4c load_t4_complex(const std::string& path);

}  // namespace mlti
