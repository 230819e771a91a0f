#ifndef PCGSIM_HILBERT_HPP
#define PCGSIM_HILBERT_HPP

#include <complex>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

#include <Eigen/Dense>

namespace pcg {

using Complex = std::complex<double>;
using Matrix = Eigen::MatrixXcd;
using Vector = Eigen::VectorXcd;
using RealMatrix = Eigen::MatrixXd;
using RealVector = Eigen::VectorXd;

constexpr double kTwoPi = 6.283185307179586476925286766559;

/// One mode of a composite system: a text label and the number of levels kept.
struct ModeSpec {
    std::string label;
    int dim = 0;
};

/// An ordered tensor product of modes. Mode order is fixed as declared;
/// all Kronecker placement respects that order.
class HilbertSpace {
  public:
    HilbertSpace() = default;

    const std::vector<ModeSpec>& modes() const { return modes_; }
    int total_dim() const { return total_dim_; }
    int num_modes() const { return static_cast<int>(modes_.size()); }
    int mode_dim(int m) const { return modes_[m].dim; }

    /// Index of the mode with the given label; throws if unknown.
    int mode_index(const std::string& label) const;

    /// Product of the dims of all modes strictly before / after mode m.
    int dim_before(int m) const;
    int dim_after(int m) const;

    /// Per-mode levels of a flat basis index (row-major, first mode slowest).
    std::vector<int> levels_of(int flat_index) const;
    int flat_index(const std::vector<int>& levels) const;

    bool operator==(const HilbertSpace& other) const;
    bool operator!=(const HilbertSpace& other) const { return !(*this == other); }

    friend HilbertSpace compose(std::vector<ModeSpec> modes);

  private:
    std::vector<ModeSpec> modes_;
    int total_dim_ = 0;
};

/// Build a composite space from a nonempty list of modes with unique labels.
HilbertSpace compose(std::vector<ModeSpec> modes);

/// A dense operator tied to a composite space.
struct Operator {
    HilbertSpace space;
    Matrix mat;

    Operator() = default;
    Operator(HilbertSpace s, Matrix m);

    Operator operator*(const Operator& rhs) const;
    Operator operator+(const Operator& rhs) const;
    Operator operator-(const Operator& rhs) const;
    Operator operator*(Complex scalar) const;
    Operator adjoint() const;
    bool is_hermitian(double tol = 1e-9) const;
    bool is_unitary(double tol = 1e-12) const;
};

struct StateVector {
    HilbertSpace space;
    Vector amps;

    StateVector() = default;
    StateVector(HilbertSpace s, Vector a);
    double norm() const { return amps.norm(); }
};

struct DensityMatrix {
    HilbertSpace space;
    Matrix mat;

    DensityMatrix() = default;
    DensityMatrix(HilbertSpace s, Matrix m);
    double trace_real() const { return mat.trace().real(); }

    /// Hermitian within tol, trace 1 within tol, eigenvalues >= -tol.
    void validate(double tol = 1e-9) const;
};

/// Pure-state density matrix |psi><psi|.
DensityMatrix pure_state(const StateVector& psi);

/// Basis state |levels> on the given space.
StateVector basis_state(const HilbertSpace& space, const std::vector<int>& levels);

/// Lowering operator on dim levels: entries sqrt(n) on the first superdiagonal.
RealMatrix ladder(int dim);

/// Number operator diag(0, 1, ..., dim-1).
RealMatrix number_op(int dim);

/// Place a local matrix on the named mode, identity elsewhere.
Operator embed(const HilbertSpace& space, const std::string& mode_label, const Matrix& local);
Operator identity_op(const HilbertSpace& space);

/// Eigendecomposition of a Hermitian operator; eigenvalues ascending,
/// eigenvectors orthonormal columns. Throws on non-Hermitian input.
std::pair<RealVector, Matrix> eig_hermitian(const Matrix& a, double herm_tol = 1e-9);
std::pair<RealVector, Matrix> eig_hermitian(const Operator& op, double herm_tol = 1e-9);

/// Trace out every mode not in `keep`; result modes keep their declared order.
DensityMatrix partial_trace(const DensityMatrix& rho, const std::vector<std::string>& keep);

}  // namespace pcg

#endif
