#pragma once

// Structured generator forms and their unique extraction from raw fields.
//
// Every Lie symmetry of the evolution equations handled here decomposes as
//   1D: Q = D(tau) + G(chi) + lam M + zeta I
//   2D: Q = D(tau) + kappa J + G(sg1, sg2) + chi M
// with real-valued functions of t (kappa a real constant). The monomials in
// x multiplying each slot are independent, so the decomposition is unique and
// extraction is total on fields of that shape.

#include "calculus.hpp"
#include "fields.hpp"

namespace nlsym {

struct sfield1 {
	expr tau = e_zero();
	expr chi = e_zero();
	expr lam = e_zero();
	expr zeta = e_zero();
};

struct sfield2 {
	expr tau = e_zero();
	expr kappa = e_zero();
	expr sg1 = e_zero();
	expr sg2 = e_zero();
	expr chi = e_zero();
};

// depends on nothing but t (and parameter symbols / functions of t)
inline bool fn_of_t(const expr& e) {
	for (atom_id a : atoms_of(e)) {
		const atom_data& d = adat(a);
		if (d.kind == atom_kind::jet || d.kind == atom_kind::rho_mod || d.kind == atom_kind::polar_ang)
			return false;
		if (d.kind == atom_kind::sym && (a == coord_atom(1) || a == coord_atom(2))) return false;
	}
	return true;
}

inline bool is_real_valued(const expr& e) { return is_zero(esub(conj(e), e)); }

inline vfield to_vfield(const sfield1& s) {
	return vf_add(vf_add(gen_D1(s.tau), gen_G1(s.chi)), vf_add(gen_lam_M(s.lam), gen_zeta_I(s.zeta)));
}

inline vfield to_vfield(const sfield2& s) {
	vfield q = vf_add(gen_D2(s.tau), vf_scale(gen_J(), s.kappa));
	return vf_add(vf_add(q, gen_G2(s.sg1, s.sg2)), gen_chi_M2(s.chi));
}

namespace detail {
inline void need(bool ok, const char* what) {
	if (!ok) throw kernel_error(std::string("structured extraction: ") + what);
}
inline void need_t_real(const expr& e, const char* what) {
	need(fn_of_t(e), what);
	need(is_real_valued(e), what);
}
}  // namespace detail

inline sfield1 extract_structured1(const vfield& q) {
	detail::need(q.nx == 1 && q.ncomp == 1, "expected a scalar 1D field");
	sfield1 s;
	s.tau = q.xi_t;
	detail::need_t_real(s.tau, "xi^t must be a real function of t");
	s.chi = esub(q.xi[0], emul(emul(e_rat(rat(1, 2)), Dt(s.tau)), x_var()));
	detail::need_t_real(s.chi, "xi^x - tau_t x/2 must be a real function of t");
	expr c = ediv(q.eta[0], psi_var());
	c = esub(c, emul(emul(e_rat(rat(1, 8)), Dt(Dt(s.tau))), emul(e_i(), emul(x_var(), x_var()))));
	c = esub(c, emul(emul(e_rat(rat(1, 2)), Dt(s.chi)), emul(e_i(), x_var())));
	detail::need(fn_of_t(c), "eta/psi has terms outside the quadratic-phase shape");
	s.zeta = re_part(c);
	s.lam = im_part(c);
	detail::need(vf_eq(to_vfield(s), q), "field is not of the structured form");
	return s;
}

inline sfield2 extract_structured2(const vfield& q) {
	detail::need(q.nx == 2 && q.ncomp == 1, "expected a scalar 2D field");
	sfield2 s;
	s.tau = q.xi_t;
	detail::need_t_real(s.tau, "xi^t must be a real function of t");
	s.kappa = pd(q.xi[1], coord_atom(1));
	detail::need(fn_of_t(s.kappa) && t_free(s.kappa) && is_real_valued(s.kappa),
	             "rotation coefficient must be a real constant");
	expr half_tt = emul(e_rat(rat(1, 2)), Dt(s.tau));
	s.sg1 = esub(q.xi[0], esub(emul(half_tt, x_var(1)), emul(s.kappa, x_var(2))));
	s.sg2 = esub(q.xi[1], eadd(emul(half_tt, x_var(2)), emul(s.kappa, x_var(1))));
	detail::need_t_real(s.sg1, "xi^1 residue must be a real function of t");
	detail::need_t_real(s.sg2, "xi^2 residue must be a real function of t");
	expr c = ediv(q.eta[0], psi_var());
	expr xx = eadd(emul(x_var(1), x_var(1)), emul(x_var(2), x_var(2)));
	c = esub(c, emul(emul(e_rat(rat(1, 8)), Dt(Dt(s.tau))), emul(e_i(), xx)));
	c = esub(c, emul(emul(e_rat(rat(1, 2)), e_i()),
	                 eadd(emul(Dt(s.sg1), x_var(1)), emul(Dt(s.sg2), x_var(2)))));
	detail::need(fn_of_t(c), "eta/psi has terms outside the quadratic-phase shape");
	detail::need(is_zero(eadd(re_part(c), half_tt)), "the amplitude part must equal -tau_t/2");
	s.chi = im_part(c);
	detail::need(vf_eq(to_vfield(s), q), "field is not of the structured form");
	return s;
}

}  // namespace nlsym
