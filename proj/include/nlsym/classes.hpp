#pragma once

// Equation families handled by the toolkit. Everything is keyed by the shape
// of the coefficient S in  i psi_t + (Laplacian psi) + S psi = 0:
//
//   S       S = S(t, x, rho), S_rho != 0, rho = |psi|
//   V       S = f(rho) + V(t, x)
//   Vf      V-family with the nonlinearity f held fixed
//   P0      f = sigma ln(rho)
//   Pgamma  f = sigma rho^gamma, gamma != 0
//   C       two space dimensions, S = rho^2 + V(t, x1, x2)

#include "calculus.hpp"
#include "fields.hpp"

namespace nlsym {

enum class class_tag { F, Fprime, S, V, Vf, P0, Pgamma, C };

struct equation_instance {
	class_tag cls = class_tag::S;
	int nx = 1;
	expr S = e_zero();      // full coefficient of psi
	expr f = e_zero();      // nonlinearity part (V-family and below)
	expr V = e_zero();      // potential part (V-family and below)
	expr sigma = e_zero();  // P0 / Pgamma
	expr gamma = e_zero();  // Pgamma
};

// gamma' = 1/gamma - 1/4
inline expr gamma_prime(const expr& gamma) {
	return esub(ediv(e_int(1), gamma), e_rat(rat(1, 4)));
}

namespace detail {

inline bool depends_on_modulus(const expr& e) {
	for (atom_id a : atoms_of(e))
		if (adat(a).kind == atom_kind::rho_mod || adat(a).kind == atom_kind::jet) return true;
	return false;
}

inline void check_potential(const expr& V, int nx) {
	if (depends_on_modulus(V)) throw kernel_error("potential must not depend on the modulus");
	if (nx == 1 && mentions(V, coord_atom(2))) throw kernel_error("1D potential mentions x2");
}

inline void check_nonlinearity(const expr& f) {
	// integer powers of the modulus collapse to psi psi* monomials, so demand
	// phase invariance rather than literal absence of psi
	expr bal = esub(emul(psi_var(), pd(f, a_jet(0, false, 0, 0, 0))),
	                emul(psi_conj_var(), pd(f, a_jet(0, true, 0, 0, 0))));
	if (!is_zero(bal)) throw kernel_error("nonlinearity must be a function of the modulus");
	for (atom_id a : atoms_of(f)) {
		const atom_data& d = adat(a);
		if (d.kind == atom_kind::jet && (d.jmi[0] + d.jmi[1] + d.jmi[2]) > 0)
			throw kernel_error("nonlinearity must be a function of the modulus");
		if (d.kind == atom_kind::sym && (a == coord_atom(0) || a == coord_atom(1) || a == coord_atom(2)))
			throw kernel_error("nonlinearity must not depend on t or x");
	}
}

}  // namespace detail

// S = S(t, x, rho): checked through  psi S_psi - psi* S_psi*  = 0
inline equation_instance make_instance_S(const expr& S, int nx = 1) {
	expr bal = esub(emul(psi_var(), pd(S, a_jet(0, false, 0, 0, 0))),
	                emul(psi_conj_var(), pd(S, a_jet(0, true, 0, 0, 0))));
	if (!is_zero(bal)) throw kernel_error("arbitrary element is not a function of (t, x, rho)");
	equation_instance e;
	e.cls = class_tag::S;
	e.nx = nx;
	e.S = S;
	return e;
}

inline equation_instance make_instance_V(const expr& f, const expr& V, class_tag cls = class_tag::V) {
	detail::check_nonlinearity(f);
	detail::check_potential(V, 1);
	equation_instance e;
	e.cls = cls;
	e.nx = 1;
	e.f = f;
	e.V = V;
	e.S = eadd(f, V);
	return e;
}

inline equation_instance make_instance_Vf(const expr& f, const expr& V) {
	return make_instance_V(f, V, class_tag::Vf);
}

inline equation_instance make_instance_P0(const expr& sigma, const expr& V) {
	equation_instance e = make_instance_V(emul(sigma, make_ln(rho_var())), V, class_tag::P0);
	e.sigma = sigma;
	return e;
}

inline equation_instance make_instance_Pgamma(const expr& sigma, const expr& gamma, const expr& V) {
	if (is_zero(gamma)) throw kernel_error("power nonlinearity needs gamma != 0");
	equation_instance e = make_instance_V(emul(sigma, make_pow(rho_var(), gamma)), V, class_tag::Pgamma);
	e.sigma = sigma;
	e.gamma = gamma;
	return e;
}

inline equation_instance make_instance_C(const expr& V) {
	detail::check_potential(V, 2);
	equation_instance e;
	e.cls = class_tag::C;
	e.nx = 2;
	e.f = emul(rho_var(), rho_var());
	e.V = V;
	e.S = eadd(e.f, V);
	return e;
}

// rho S_rho_rho / S_rho: preserved by every admissible map apart from the
// time reflection (which conjugates it)
// rho d/drho as the Euler operator psi d/dpsi + psi* d/dpsi*: safe on folded
// psi psi* monomials, where a literal second rho-derivative is not
inline expr euler_modulus(const expr& e) {
	return eadd(emul(psi_var(), pd(e, a_jet(0, false, 0, 0, 0))),
	            emul(psi_conj_var(), pd(e, a_jet(0, true, 0, 0, 0))));
}

inline expr invariant_rho_ratio(const expr& S) {
	expr a = euler_modulus(S);  // rho S_rho
	if (is_zero(a)) throw kernel_error("invariant_rho_ratio: S does not depend on the modulus");
	expr b = euler_modulus(a);  // rho S_rho + rho^2 S_rho_rho
	return ediv(esub(b, a), a);
}

// moving a complex constant between the nonlinearity and the potential
inline std::pair<expr, expr> gauge_shift(const expr& f, const expr& V, const expr& beta) {
	if (!t_free(beta) || mentions(beta, coord_atom(1)) || mentions(beta, coord_atom(2)) ||
	    detail::depends_on_modulus(beta))
		throw kernel_error("gauge shift needs a constant");
	return {eadd(f, beta), esub(V, beta)};
}

}  // namespace nlsym
