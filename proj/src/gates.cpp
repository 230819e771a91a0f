#include "pcgsim/gates.hpp"

#include <cmath>

namespace pcg {

namespace {

const Complex kI(0.0, 1.0);

Matrix pauli_x() {
    Matrix x(2, 2);
    x << 0, 1, 1, 0;
    return x;
}

Matrix pauli_y() {
    Matrix y(2, 2);
    y << 0, -kI, kI, 0;
    return y;
}

Matrix pauli_z() {
    Matrix z(2, 2);
    z << 1, 0, 0, -1;
    return z;
}

// cos(phi) X + sin(phi) Y on a 2-level system.
Matrix xy_rotation_axis(double phi) { return std::cos(phi) * pauli_x() + std::sin(phi) * pauli_y(); }

}  // namespace

HilbertSpace qubit_space(int n) {
    if (n < 1) throw std::invalid_argument("qubit_space: need n >= 1");
    std::vector<ModeSpec> modes;
    for (int i = 1; i <= n; ++i) modes.push_back({"q" + std::to_string(i), 2});
    return compose(std::move(modes));
}

HilbertSpace qubit_ancilla_space(int n, int ancilla_levels) {
    if (ancilla_levels < 2) throw std::invalid_argument("ancilla needs at least 2 levels");
    std::vector<ModeSpec> modes;
    for (int i = 1; i <= n; ++i) modes.push_back({"q" + std::to_string(i), 2});
    modes.push_back({"p", ancilla_levels});
    return compose(std::move(modes));
}

std::pair<Operator, Operator> parity_projectors(int n) {
    HilbertSpace space = qubit_space(n);
    Operator zz = identity_op(space);
    for (int i = 1; i <= n; ++i) zz = zz * embed(space, "q" + std::to_string(i), pauli_z());
    Operator id = identity_op(space);
    Operator p_plus = (id + zz) * Complex(0.5);
    Operator p_minus = (id - zz) * Complex(0.5);
    return {p_plus, p_minus};
}

Operator hamming_projector(int n, int w) {
    HilbertSpace space = qubit_space(n);
    Matrix p = Matrix::Zero(space.total_dim(), space.total_dim());
    for (int idx = 0; idx < space.total_dim(); ++idx) {
        const std::vector<int> levels = space.levels_of(idx);
        int weight = 0;
        for (int v : levels) weight += v;
        if (weight == w) p(idx, idx) = 1.0;
    }
    return Operator(space, std::move(p));
}

namespace {

// Lift an n-qubit operator to qubits x 2-level ancilla (identity on the ancilla).
Operator lift_to_ancilla(const Operator& qubit_op, const HilbertSpace& full) {
    const int dq = qubit_op.space.total_dim();
    Matrix out = Matrix::Zero(2 * dq, 2 * dq);
    for (int r = 0; r < dq; ++r)
        for (int c = 0; c < dq; ++c) {
            out(2 * r, 2 * c) = qubit_op.mat(r, c);
            out(2 * r + 1, 2 * c + 1) = qubit_op.mat(r, c);
        }
    return Operator(full, std::move(out));
}

}  // namespace

Operator pcf_unitary(int n, double phi) {
    HilbertSpace full = qubit_ancilla_space(n, 2);
    auto [p_plus, p_minus] = parity_projectors(n);
    Operator pp = lift_to_ancilla(p_plus, full);
    Operator pm = lift_to_ancilla(p_minus, full);
    Operator rot = embed(full, "p", xy_rotation_axis(phi));
    return pp + (pm * rot) * kI;
}

Operator pcp_unitary(int n, double phi) {
    auto [p_plus, p_minus] = parity_projectors(n);
    return p_plus + p_minus * std::exp(kI * phi);
}

Operator modified_pcf_unitary(double phi1, double phi3, double chi) {
    const int n = 4;
    HilbertSpace full = qubit_ancilla_space(n, 2);
    auto [p_plus, p_minus] = parity_projectors(n);
    Operator pp = lift_to_ancilla(p_plus, full);
    Operator p1 = lift_to_ancilla(hamming_projector(n, 1), full);
    Operator p3 = lift_to_ancilla(hamming_projector(n, 3), full);
    Operator r1 = embed(full, "p", xy_rotation_axis(phi1));
    Operator r3 = embed(full, "p", xy_rotation_axis(phi3));
    return pp + (p1 * r1) * (kI * std::exp(kI * chi)) + (p3 * r3) * (kI * std::exp(-kI * chi));
}

Operator modified_pcf_pcp_sequence(double phi, double chi) {
    // The phase-carrying flip acts first in time (rightmost factor).
    return modified_pcf_unitary(M_PI, M_PI, chi) *
           modified_pcf_unitary(phi - 2.0 * chi, phi + 2.0 * chi, chi);
}

std::pair<Operator, Operator> parity_kraus(int n) {
    HilbertSpace full = qubit_ancilla_space(n, 2);
    auto [p_plus, p_minus] = parity_projectors(n);
    Matrix k00(2, 2), k10(2, 2);
    k00 << 1, 0, 0, 0;  // |0><0|
    k10 << 0, 0, 1, 0;  // |1><0|
    Operator kraus0 = lift_to_ancilla(p_plus, full) * embed(full, "p", k00);
    Operator kraus1 = lift_to_ancilla(p_minus, full) * embed(full, "p", k10);
    return {kraus0, kraus1};
}

StateVector ghz_target(int n) {
    if (n < 2) throw std::invalid_argument("ghz_target: need n >= 2");
    HilbertSpace space = qubit_space(n);
    const int dim = space.total_dim();
    Vector plus = Vector::Ones(dim) / std::sqrt(static_cast<double>(dim));
    Vector minus(dim);
    for (int idx = 0; idx < dim; ++idx) {
        const std::vector<int> levels = space.levels_of(idx);
        int weight = 0;
        for (int v : levels) weight += v;
        minus(idx) = ((weight % 2) ? -1.0 : 1.0) / std::sqrt(static_cast<double>(dim));
    }
    Vector out = (plus - kI * minus) / std::sqrt(2.0);
    return StateVector(space, std::move(out));
}

Operator readout_circuit_qubit1(int n) {
    HilbertSpace space = qubit_space(n);
    Matrix h(2, 2);
    h << 1, 1, 1, -1;
    h /= std::sqrt(2.0);
    Matrix s_dag(2, 2);
    s_dag << 1, 0, 0, -kI;
    Operator h1 = embed(space, "q1", h);
    Operator s1_dag = embed(space, "q1", s_dag);
    // The defining contract is U^dag Z1 U = Z1...Zn; with S = diag(1, i) and
    // the phase convention of pcp_unitary, the phase argument that satisfies
    // it exactly is pi/2.
    Operator u = h1 * s1_dag * pcp_unitary(n, M_PI / 2.0) * h1;

    Operator z1 = embed(space, "q1", pauli_z());
    Operator zz = identity_op(space);
    for (int i = 1; i <= n; ++i) zz = zz * embed(space, "q" + std::to_string(i), pauli_z());
    const double dev = (u.adjoint() * z1 * u - zz).mat.cwiseAbs().maxCoeff();
    if (dev > 1e-12) {
        throw std::runtime_error("readout_circuit_qubit1: parity identity violated, dev = " +
                                 std::to_string(dev));
    }
    return u;
}

Operator effective_h0(const EffectiveModel& model) {
    const int n = model.n_qubits;
    HilbertSpace full = qubit_ancilla_space(n, model.ancilla_levels);
    Matrix h = Matrix::Zero(full.total_dim(), full.total_dim());

    for (int idx = 0; idx < full.total_dim(); ++idx) {
        const std::vector<int> levels = full.levels_of(idx);
        double sum_z = 0.0, qubit_energy = 0.0, zz = 1.0;
        for (int i = 0; i < n; ++i) {
            const double z = (levels[i] == 0) ? 1.0 : -1.0;
            sum_z += z;
            zz *= z;
            const double wi = model.omega_qubit.empty() ? 0.0 : model.omega_qubit[i];
            qubit_energy += -0.5 * wi * z;
        }
        const double delta = -0.5 * model.g * sum_z;
        const int np = levels[n];
        double ancilla_energy;
        if (model.ancilla_levels == 2) {
            const double zp = (np == 0) ? 1.0 : -1.0;
            ancilla_energy = -0.5 * (model.omega_ancilla + delta) * (zp - 1.0);
        } else {
            ancilla_energy = (model.omega_ancilla + delta) * np +
                             0.5 * model.alpha * np * (np - 1);
        }
        h(idx, idx) = qubit_energy + ancilla_energy + model.g_zz * zz;
    }
    return Operator(full, std::move(h));
}

Matrix single_qubit_drive_generator(double phi) { return -0.5 * xy_rotation_axis(phi); }

Matrix single_qubit_rotation(double phi, double area) {
    // exp(-i * area * G) with G = -(1/2)(cos X + sin Y); G^2 = 1/4.
    const Matrix g = single_qubit_drive_generator(phi);
    return std::cos(area / 2.0) * Matrix::Identity(2, 2) -
           kI * 2.0 * std::sin(area / 2.0) * g;
}

bool equal_up_to_global_phase(const Matrix& a, const Matrix& b, double tol) {
    if (a.rows() != b.rows() || a.cols() != b.cols()) return false;
    int rmax = 0, cmax = 0;
    double best = 0.0;
    for (int r = 0; r < b.rows(); ++r)
        for (int c = 0; c < b.cols(); ++c)
            if (std::abs(b(r, c)) > best) {
                best = std::abs(b(r, c));
                rmax = r;
                cmax = c;
            }
    if (best < tol) return a.cwiseAbs().maxCoeff() < tol;
    const Complex ratio = a(rmax, cmax) / b(rmax, cmax);
    if (std::abs(std::abs(ratio) - 1.0) > tol) return false;
    return (a - ratio * b).cwiseAbs().maxCoeff() <= tol;
}

}  // namespace pcg
