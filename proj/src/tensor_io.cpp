#include "mlti/tensor_io.hpp"

#include <cstdio>
#include <fstream>
#include <istream>
#include <ostream>

namespace mlti {
namespace {

std::string fmt(double x) {
  char buf[40];
  std::snprintf(buf, sizeof buf, "%.17g", x);
  return buf;
}

void write_header(std::ostream& os, const Dims4& d, const char* field) {
  os << "T4 " << d.J1 << ' ' << d.J2 << ' ' << d.K1 << ' ' << d.K2 << ' '
     << field << '\n';
}

struct Header {
  Dims4 dims;
  bool complex = false;
};

Header read_header(std::istream& is) {
  std::string magic, field;
  Header h;
  if (!(is >> magic) || magic != "T4")
    throw FormatError("T4: missing magic token");
  if (!(is >> h.dims.J1 >> h.dims.J2 >> h.dims.K1 >> h.dims.K2 >> field))
    throw FormatError("T4: truncated header");
  if (h.dims.J1 < 0 || h.dims.J2 < 0 || h.dims.K1 < 0 || h.dims.K2 < 0)
    throw FormatError("T4: negative dimension");
  if (field == "complex")
    h.complex = true;
  else if (field != "real")
    throw FormatError("T4: unknown field '" + field + "'");
  return h;
}

double read_value(std::istream& is) {
  double x;
  if (!(is >> x)) throw FormatError("T4: too few values");
  return x;
}

void expect_end(std::istream& is) {
  std::string extra;
  if (is >> extra) throw FormatError("T4: trailing data after values");
}

}  // namespace

void write_t4(std::ostream& os, const Tensor4d& t) {
  write_header(os, t.dims(), "real");
  const MatD& m = t.unfold();
  for (Index i = 0; i < m.size(); ++i) os << fmt(m.data()[i]) << '\n';
}

void write_t4(std::ostream& os, const Tensor4c& t) {
  write_header(os, t.dims(), "complex");
  const MatC& m = t.unfold();
  for (Index i = 0; i < m.size(); ++i)
    os << fmt(m.data()[i].real()) << ' ' << fmt(m.data()[i].imag()) << '\n';
}

Tensor4d read_t4_real(std::istream& is) {
  Header h = read_header(is);
  if (h.complex) throw FormatError("T4: expected a real tensor");
  MatD m(h.dims.rows(), h.dims.cols());
  for (Index i = 0; i < m.size(); ++i) m.data()[i] = read_value(is);
  expect_end(is);
  return Tensor4d::fold(std::move(m), h.dims);
}

Tensor4c read_t4_complex(std::istream& is) {
  Header h = read_header(is);
  MatC m(h.dims.rows(), h.dims.cols());
  for (Index i = 0; i < m.size(); ++i) {
    double re = read_value(is);
    double im = h.complex ? read_value(is) : 0.0;
    m.data()[i] = cd(re, im);
  }
  expect_end(is);
  return Tensor4c::fold(std::move(m), h.dims);
}

namespace {

template <class T>
void save_any(const std::string& path, const T& t) {
  std::ofstream os(path);
  if (!os) throw Error("cannot open " + path + " for writing");
  write_t4(os, t);
  if (!os) throw Error("write failed: " + path);
}

std::ifstream open_in(const std::string& path) {
  std::ifstream is(path);
  if (!is) throw Error("cannot open " + path);
  return is;
}

}  // namespace

void save_t4(const std::string& path, const Tensor4d& t) { save_any(path, t); }
void save_t4(const std::string& path, const Tensor4c& t) { save_any(path, t); }

Tensor4d load_t4_real(const std::string& path) {
  auto is = open_in(path);
  return read_t4_real(is);
}

Tensor4c load_t4_complex(const std::string& path) {
  auto is = open_in(path);
  return read_t4_complex(is);
}

}  // namespace mlti
