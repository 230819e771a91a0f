#ifndef PCGSIM_GATES_HPP
#define PCGSIM_GATES_HPP

#include "pcgsim/hilbert.hpp"

namespace pcg {

// Ideal-model objects for the parity-controlled gate set. Qubit convention
// throughout: |0> has Z = +1. Ancilla basis ordering: |0_P>, |1_P>(, |2_P>).

/// Space of n two-level qubits labeled q1..qn.
HilbertSpace qubit_space(int n);
/// Qubits plus a trailing ancilla mode with the given number of levels.
HilbertSpace qubit_ancilla_space(int n, int ancilla_levels);

/// Parity projectors P_+- = (1 +- Z_1...Z_n)/2 on the n-qubit space.
std::pair<Operator, Operator> parity_projectors(int n);

/// Projector onto qubit states of Hamming weight w (number of |1>'s).
Operator hamming_projector(int n, int w);

/// Parity-controlled flip on qubits x 2-level ancilla:
/// U = P+ 1_P + i P- (cos(phi) X_P + sin(phi) Y_P).
Operator pcf_unitary(int n, double phi);

/// Parity-controlled phase on the qubit register: U = P+ + e^{i phi} P-.
Operator pcp_unitary(int n, double phi);

/// Four-qubit flip variant with weight-resolved phases:
/// U = P+ + i e^{i chi} P1 R(phi1) + i e^{-i chi} P3 R(phi3),
/// R(phi) = cos(phi) X_P + sin(phi) Y_P.
Operator modified_pcf_unitary(double phi1, double phi3, double chi);

/// The two-flip composition that realizes pcp_unitary(4, phi) on the |0_P>
/// subspace: modified_pcf(pi, pi, chi) * modified_pcf(phi - 2chi, phi + 2chi, chi).
Operator modified_pcf_pcp_sequence(double phi, double chi);

/// Measurement channel of a flip followed by an ideal ancilla readout:
/// K0 = P+ |0_P><0_P|, K1 = P- |1_P><0_P| on qubits x 2-level ancilla.
std::pair<Operator, Operator> parity_kraus(int n);

/// (|+>^n - i|->^n)/sqrt(2), the n-qubit entangled target of pcp(pi/2).
StateVector ghz_target(int n);

/// Unitary encoding the joint parity in qubit 1: satisfies
/// U^dag Z_1 U = Z_1...Z_n exactly. Built as H_1 S_1^dag pcp(pi/2) H_1.
Operator readout_circuit_qubit1(int n);

/// Effective undriven Hamiltonian parameters, angular frequencies in rad/ns.
struct EffectiveModel {
    int n_qubits = 2;
    std::vector<double> omega_qubit;  // rad/ns, size n_qubits (may be empty)
    double omega_ancilla = 0.0;       // rad/ns
    double g = 0.0;                   // qubit-ancilla longitudinal coupling, rad/ns
    double alpha = 0.0;               // ancilla anharmonicity, rad/ns
    int ancilla_levels = 3;           // 2 or 3
    double g_zz = 0.0;                // parasitic qubit-qubit coupling, rad/ns
};

/// Lab-frame diagonal Hamiltonian of the model. With a 2-level ancilla:
/// H0 = -1/2 (w_P + Delta)(Z_P - 1) - 1/2 sum w_i Z_i, Delta = -(g/2) sum Z_i.
/// With 3 levels the ancilla part is (w_P + Delta) n_P + (alpha/2) n_P (n_P - 1).
Operator effective_h0(const EffectiveModel& model);

/// Single-qubit drive generator per unit drive amplitude, valid with the
/// ancilla in its ground state: -(1/2)(cos(phi) X + sin(phi) Y).
Matrix single_qubit_drive_generator(double phi);

/// Gate made by integrating the generator over a pulse of the given area.
Matrix single_qubit_rotation(double phi, double area);

/// True if a = e^{i theta} b for some real theta, to the given tolerance.
bool equal_up_to_global_phase(const Matrix& a, const Matrix& b, double tol = 1e-9);

}  // namespace pcg

#endif
