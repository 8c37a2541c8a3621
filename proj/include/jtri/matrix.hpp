#pragma once

#include <complex>
#include <cstddef>
#include <initializer_list>
#include <vector>

namespace jtri {

using cplx = std::complex<double>;

// Dense complex matrix stored row-major. Element access is 0-based; the
// operator-level API (extraction/embedding) uses 1-based indices.
class CMatrix {
public:
    CMatrix() = default;
    CMatrix(std::size_t rows, std::size_t cols);
    CMatrix(std::initializer_list<std::initializer_list<cplx>> rows);

    static CMatrix identity(std::size_t n);
    static CMatrix zeros(std::size_t rows, std::size_t cols) { return CMatrix(rows, cols); }
    static CMatrix diag(const std::vector<double>& d);
    static CMatrix diag(const std::vector<cplx>& d);
    static CMatrix column(const std::vector<cplx>& v);

    std::size_t rows() const { return rows_; }
    std::size_t cols() const { return cols_; }
    bool square() const { return rows_ == cols_; }
    bool empty() const { return data_.empty(); }

    cplx& operator()(std::size_t i, std::size_t j) { return data_[i * cols_ + j]; }
    const cplx& operator()(std::size_t i, std::size_t j) const { return data_[i * cols_ + j]; }

    const std::vector<cplx>& data() const { return data_; }
    std::vector<cplx>& data() { return data_; }

    CMatrix adjoint() const;
    CMatrix transpose() const;
    CMatrix conj() const;
    CMatrix block(std::size_t r0, std::size_t c0, std::size_t nr, std::size_t nc) const;
    void set_block(std::size_t r0, std::size_t c0, const CMatrix& b);
    std::vector<cplx> col(std::size_t j) const;
    void set_col(std::size_t j, const std::vector<cplx>& v);
    std::vector<cplx> diagonal() const;

    void swap_rows(std::size_t a, std::size_t b);
    void swap_cols(std::size_t a, std::size_t b);

    double frobenius_norm() const;
    double max_abs() const;
    bool all_finite() const;

    CMatrix& operator+=(const CMatrix& o);
    CMatrix& operator-=(const CMatrix& o);
    CMatrix& operator*=(cplx s);

private:
    std::size_t rows_ = 0;
    std::size_t cols_ = 0;
    std::vector<cplx> data_;
};

CMatrix operator+(CMatrix a, const CMatrix& b);
CMatrix operator-(CMatrix a, const CMatrix& b);
CMatrix operator*(const CMatrix& a, const CMatrix& b);
CMatrix operator*(cplx s, CMatrix a);
CMatrix operator*(CMatrix a, cplx s);
std::vector<cplx> operator*(const CMatrix& a, const std::vector<cplx>& x);

// Largest magnitude strictly below the diagonal.
double lower_residual(const CMatrix& a);
// Largest magnitude strictly above the diagonal.
double upper_residual(const CMatrix& a);
// max |A†A - I| over entries.
double orthonormality_residual(const CMatrix& a);
bool is_hermitian(const CMatrix& a, double tol);

double norm2(const std::vector<cplx>& v);
cplx dot(const std::vector<cplx>& a, const std::vector<cplx>& b);  // a† b

}  // namespace jtri
