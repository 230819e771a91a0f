#include "pcgsim/hilbert.hpp"

#include <algorithm>
#include <set>

namespace pcg {

HilbertSpace compose(std::vector<ModeSpec> modes) {
    if (modes.empty()) {
        throw std::invalid_argument("compose: empty mode list");
    }
    std::set<std::string> seen;
    long long total = 1;
    for (const auto& m : modes) {
        if (m.dim < 1) {
            throw std::invalid_argument("compose: mode '" + m.label + "' has dim < 1");
        }
        if (!seen.insert(m.label).second) {
            throw std::invalid_argument("compose: duplicate mode label '" + m.label + "'");
        }
        total *= m.dim;
        if (total > (1 << 24)) {
            throw std::invalid_argument("compose: total dimension too large for dense storage");
        }
    }
    HilbertSpace space;
    space.modes_ = std::move(modes);
    space.total_dim_ = static_cast<int>(total);
    return space;
}

int HilbertSpace::mode_index(const std::string& label) const {
    for (int i = 0; i < num_modes(); ++i) {
        if (modes_[i].label == label) return i;
    }
    throw std::invalid_argument("unknown mode label '" + label + "'");
}

int HilbertSpace::dim_before(int m) const {
    int d = 1;
    for (int i = 0; i < m; ++i) d *= modes_[i].dim;
    return d;
}

int HilbertSpace::dim_after(int m) const {
    int d = 1;
    for (int i = m + 1; i < num_modes(); ++i) d *= modes_[i].dim;
    return d;
}

std::vector<int> HilbertSpace::levels_of(int flat_index) const {
    std::vector<int> levels(num_modes());
    for (int m = num_modes() - 1; m >= 0; --m) {
        levels[m] = flat_index % modes_[m].dim;
        flat_index /= modes_[m].dim;
    }
    return levels;
}

int HilbertSpace::flat_index(const std::vector<int>& levels) const {
    if (static_cast<int>(levels.size()) != num_modes()) {
        throw std::invalid_argument("flat_index: wrong number of levels");
    }
    int idx = 0;
    for (int m = 0; m < num_modes(); ++m) {
        if (levels[m] < 0 || levels[m] >= modes_[m].dim) {
            throw std::invalid_argument("flat_index: level out of range for mode " + modes_[m].label);
        }
        idx = idx * modes_[m].dim + levels[m];
    }
    return idx;
}

bool HilbertSpace::operator==(const HilbertSpace& other) const {
    if (total_dim_ != other.total_dim_ || modes_.size() != other.modes_.size()) return false;
    for (size_t i = 0; i < modes_.size(); ++i) {
        if (modes_[i].label != other.modes_[i].label || modes_[i].dim != other.modes_[i].dim)
            return false;
    }
    return true;
}

Operator::Operator(HilbertSpace s, Matrix m) : space(std::move(s)), mat(std::move(m)) {
    if (mat.rows() != mat.cols() || mat.rows() != space.total_dim()) {
        throw std::invalid_argument("Operator: matrix dimension does not match space");
    }
}

Operator Operator::operator*(const Operator& rhs) const {
    if (space != rhs.space) throw std::invalid_argument("Operator product: space mismatch");
    return Operator(space, mat * rhs.mat);
}

Operator Operator::operator+(const Operator& rhs) const {
    if (space != rhs.space) throw std::invalid_argument("Operator sum: space mismatch");
    return Operator(space, mat + rhs.mat);
}

Operator Operator::operator-(const Operator& rhs) const {
    if (space != rhs.space) throw std::invalid_argument("Operator difference: space mismatch");
    return Operator(space, mat - rhs.mat);
}

Operator Operator::operator*(Complex scalar) const { return Operator(space, scalar * mat); }

Operator Operator::adjoint() const { return Operator(space, mat.adjoint()); }

bool Operator::is_hermitian(double tol) const {
    return (mat - mat.adjoint()).cwiseAbs().maxCoeff() <= tol;
}

bool Operator::is_unitary(double tol) const {
    Matrix should_be_id = mat.adjoint() * mat;
    should_be_id -= Matrix::Identity(mat.rows(), mat.cols());
    return should_be_id.cwiseAbs().maxCoeff() <= tol;
}

StateVector::StateVector(HilbertSpace s, Vector a) : space(std::move(s)), amps(std::move(a)) {
    if (amps.size() != space.total_dim()) {
        throw std::invalid_argument("StateVector: dimension does not match space");
    }
}

DensityMatrix::DensityMatrix(HilbertSpace s, Matrix m) : space(std::move(s)), mat(std::move(m)) {
    if (mat.rows() != mat.cols() || mat.rows() != space.total_dim()) {
        throw std::invalid_argument("DensityMatrix: dimension does not match space");
    }
}

void DensityMatrix::validate(double tol) const {
    if ((mat - mat.adjoint()).cwiseAbs().maxCoeff() > tol) {
        throw std::runtime_error("DensityMatrix: not Hermitian");
    }
    if (std::abs(mat.trace().real() - 1.0) > tol || std::abs(mat.trace().imag()) > tol) {
        throw std::runtime_error("DensityMatrix: trace is not 1");
    }
    Eigen::SelfAdjointEigenSolver<Matrix> es(0.5 * (mat + mat.adjoint()),
                                             Eigen::EigenvaluesOnly);
    if (es.eigenvalues().minCoeff() < -tol) {
        throw std::runtime_error("DensityMatrix: negative eigenvalue");
    }
}

DensityMatrix pure_state(const StateVector& psi) {
    return DensityMatrix(psi.space, psi.amps * psi.amps.adjoint());
}

StateVector basis_state(const HilbertSpace& space, const std::vector<int>& levels) {
    Vector v = Vector::Zero(space.total_dim());
    v(space.flat_index(levels)) = 1.0;
    return StateVector(space, std::move(v));
}

RealMatrix ladder(int dim) {
    if (dim < 2) throw std::invalid_argument("ladder: dim must be >= 2");
    RealMatrix b = RealMatrix::Zero(dim, dim);
    for (int n = 1; n < dim; ++n) b(n - 1, n) = std::sqrt(static_cast<double>(n));
    return b;
}

RealMatrix number_op(int dim) {
    RealMatrix n = RealMatrix::Zero(dim, dim);
    for (int k = 0; k < dim; ++k) n(k, k) = k;
    return n;
}

Operator embed(const HilbertSpace& space, const std::string& mode_label, const Matrix& local) {
    const int m = space.mode_index(mode_label);
    const int dm = space.mode_dim(m);
    if (local.rows() != dm || local.cols() != dm) {
        throw std::invalid_argument("embed: local matrix is " + std::to_string(local.rows()) +
                                    "x" + std::to_string(local.cols()) + " but mode '" +
                                    mode_label + "' has dim " + std::to_string(dm));
    }
    const int before = space.dim_before(m);
    const int after = space.dim_after(m);
    const int total = space.total_dim();
    Matrix out = Matrix::Zero(total, total);
    for (int b = 0; b < before; ++b) {
        for (int r = 0; r < dm; ++r) {
            for (int c = 0; c < dm; ++c) {
                const Complex v = local(r, c);
                if (v == Complex(0.0, 0.0)) continue;
                const int row0 = (b * dm + r) * after;
                const int col0 = (b * dm + c) * after;
                for (int a = 0; a < after; ++a) out(row0 + a, col0 + a) = v;
            }
        }
    }
    return Operator(space, std::move(out));
}

Operator identity_op(const HilbertSpace& space) {
    return Operator(space, Matrix::Identity(space.total_dim(), space.total_dim()));
}

std::pair<RealVector, Matrix> eig_hermitian(const Matrix& a, double herm_tol) {
    if (a.rows() != a.cols()) throw std::invalid_argument("eig_hermitian: matrix not square");
    const double dev = (a - a.adjoint()).cwiseAbs().maxCoeff();
    const double scale = std::max(1.0, a.cwiseAbs().maxCoeff());
    if (dev > herm_tol * scale) {
        throw std::invalid_argument("eig_hermitian: input is not Hermitian (deviation " +
                                    std::to_string(dev) + ")");
    }
    Eigen::SelfAdjointEigenSolver<Matrix> es(0.5 * (a + a.adjoint()));
    if (es.info() != Eigen::Success) throw std::runtime_error("eig_hermitian: solver failed");
    return {es.eigenvalues(), es.eigenvectors()};
}

std::pair<RealVector, Matrix> eig_hermitian(const Operator& op, double herm_tol) {
    return eig_hermitian(op.mat, herm_tol);
}

DensityMatrix partial_trace(const DensityMatrix& rho, const std::vector<std::string>& keep) {
    const HilbertSpace& space = rho.space;
    std::vector<bool> kept(space.num_modes(), false);
    for (const auto& label : keep) kept[space.mode_index(label)] = true;

    std::vector<ModeSpec> keep_modes;
    std::vector<int> keep_idx, trace_idx;
    for (int m = 0; m < space.num_modes(); ++m) {
        if (kept[m]) {
            keep_modes.push_back(space.modes()[m]);
            keep_idx.push_back(m);
        } else {
            trace_idx.push_back(m);
        }
    }
    if (keep_modes.empty()) throw std::invalid_argument("partial_trace: nothing kept");

    HilbertSpace out_space = compose(keep_modes);
    Matrix out = Matrix::Zero(out_space.total_dim(), out_space.total_dim());

    int trace_dim = 1;
    for (int m : trace_idx) trace_dim *= space.mode_dim(m);

    std::vector<int> row_levels(space.num_modes(), 0), col_levels(space.num_modes(), 0);
    const int out_dim = out_space.total_dim();
    for (int r = 0; r < out_dim; ++r) {
        const std::vector<int> r_keep = out_space.levels_of(r);
        for (int c = 0; c < out_dim; ++c) {
            const std::vector<int> c_keep = out_space.levels_of(c);
            Complex sum = 0.0;
            for (int t = 0; t < trace_dim; ++t) {
                int rem = t;
                for (int k = static_cast<int>(trace_idx.size()) - 1; k >= 0; --k) {
                    const int m = trace_idx[k];
                    row_levels[m] = col_levels[m] = rem % space.mode_dim(m);
                    rem /= space.mode_dim(m);
                }
                for (size_t k = 0; k < keep_idx.size(); ++k) {
                    row_levels[keep_idx[k]] = r_keep[k];
                    col_levels[keep_idx[k]] = c_keep[k];
                }
                sum += rho.mat(space.flat_index(row_levels), space.flat_index(col_levels));
            }
            out(r, c) = sum;
        }
    }
    return DensityMatrix(std::move(out_space), std::move(out));
}

}  // namespace pcg
