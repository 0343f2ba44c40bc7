#pragma once
// equivalence transformations of the Schrodinger class hierarchy: membership
// validation, action on the arbitrary elements, push-forward of vector
// fields, composition, and inversion.
//
// a one-dimensional member is stored factored as  C o Ix^ix o It^it  where
// the reflections act first and C is a continuous transformation whose time
// rate is positive on its chart,
//   t -> T(t),   x -> sT x + X(t),
//   psi -> exp( (i/8)(T_tt/T_t) x^2 + (i/2)(X_t/sT) x + Theta + i Psi ) psi
//            + phi0(t, x),
// with sT a stored square root of T_t (kept explicit so that every group
// operation stays rational), Ix the space reflection x -> -x, and It the
// time reflection t -> -t combined with complex conjugation of psi.  The
// additive component phi0 is admissible only above the modular classes and
// is rejected by the group operations unless it vanishes.

#include "classes.hpp"
#include "structured.hpp"

namespace nlsym {

struct etr1 {
	expr T = t_var();      // time reparametrization, increasing on the chart
	expr sT = e_int(1);    // square root of T_t;  sT * sT == Dt(T)
	expr X = e_zero();     // spatial shift
	expr Th = e_zero();    // log of the modulus scale
	expr Ps = e_zero();    // phase shift
	expr phi0 = e_zero();  // additive psi component (widest classes only)
	bool ix = false;       // space reflection applied first
	bool it = false;       // time reflection applied first
};

struct etr2 {
	expr T = t_var();
	expr sT = e_int(1);
	expr X1 = e_zero(), X2 = e_zero();
	expr Ps = e_zero();
	// constant orthogonal matrix acting on (x1, x2)
	expr o11 = e_int(1), o12 = e_zero(), o21 = e_zero(), o22 = e_int(1);
	bool it = false;
};

namespace detail {

inline expr comp_t(const expr& f, const expr& g) {
	subst_map s;
	s[coord_atom(0)] = g;
	return substitute(f, s);
}

inline expr trev(const expr& f) { return comp_t(f, eneg(t_var())); }

inline expr xrev(const expr& f) {
	subst_map s;
	s[coord_atom(1)] = eneg(x_var());
	return substitute(f, s);
}

inline void check_root(const expr& sT, const expr& T, const char* who) {
	if (!is_zero(esub(emul(sT, sT), Dt(T)))) throw kernel_error(std::string(who) + ": sT is not a square root of the time rate");
}

}  // namespace detail

// ------------------------------------------------- fractional-linear times

struct mobius_data {
	expr p1, p0, q1, q0;  // T = (p1 t + p0) / (q1 t + q0)
	expr det;             // p1 q0 - p0 q1
};

inline mobius_data mobius_of(const expr& T) {
	expr n = make_frac(T.num, p_const(1));
	expr d = make_frac(T.den, p_const(1));
	mobius_data m;
	m.p1 = Dt(n);
	m.q1 = Dt(d);
	if (!is_zero(Dt(m.p1)) || !is_zero(Dt(m.q1))) throw kernel_error("time map is not fractional-linear");
	m.p0 = detail::comp_t(n, e_zero());
	m.q0 = detail::comp_t(d, e_zero());
	m.det = esub(emul(m.p1, m.q0), emul(m.p0, m.q1));
	if (is_zero(m.det)) throw kernel_error("time map is not invertible");
	return m;
}

// compositional inverse of a fractional-linear time map, certified by
// resubstitution
inline expr invert_time_map(const expr& T) {
	mobius_data m = mobius_of(T);
	expr ti = ediv(esub(emul(m.q0, t_var()), m.p0), esub(m.p1, emul(m.q1, t_var())));
	if (!is_zero(esub(detail::comp_t(T, ti), t_var()))) throw kernel_error("invert_time_map: inverse certificate failed");
	return ti;
}

// square root of the time rate of a fractional-linear map, on the chart where
// the denominator of the map is positive; constant roots that are not perfect
// squares stay symbolic
inline expr sqrt_time_rate(const expr& T) {
	mobius_data m = mobius_of(T);
	if (e_is_rat(m.det)) {
		rat dv = e_rat_val(m.det);
		if (dv < 0) throw kernel_error("decreasing time map; factor through the time reflection");
		mpz_class nu = dv.get_num(), de = dv.get_den();
		if (mpz_perfect_square_p(nu.get_mpz_t()) && mpz_perfect_square_p(de.get_mpz_t())) {
			mpz_class rn, rd;
			mpz_sqrt(rn.get_mpz_t(), nu.get_mpz_t());
			mpz_sqrt(rd.get_mpz_t(), de.get_mpz_t());
			return ediv(e_rat(rat(rn) / rat(rd)), make_frac(T.den, p_const(1)));
		}
	}
	return ediv(make_pow(m.det, e_rat(rat(1, 2))), make_frac(T.den, p_const(1)));
}

// continuous transformation from closed-form data (fractional-linear time)
inline etr1 continuous1(const expr& T, const expr& X = e_zero(), const expr& Th = e_zero(), const expr& Ps = e_zero()) {
	etr1 g;
	g.T = T;
	g.sT = sqrt_time_rate(T);
	g.X = X;
	g.Th = Th;
	g.Ps = Ps;
	return g;
}

inline etr2 continuous2(const expr& T, const expr& X1 = e_zero(), const expr& X2 = e_zero(), const expr& Ps = e_zero()) {
	etr2 g;
	g.T = T;
	g.sT = sqrt_time_rate(T);
	g.X1 = X1;
	g.X2 = X2;
	g.Ps = Ps;
	return g;
}

// ------------------------------------------------------- structural pieces

namespace detail {

// log of the psi multiplier of the continuous part
inline expr phase_exponent(const etr1& c) {
	expr Tt = Dt(c.T);
	expr e1 = emul(emul(e_i(), e_rat(rat(1, 8))), emul(ediv(Dt(Tt), Tt), emul(x_var(), x_var())));
	expr e2 = emul(emul(e_i(), e_rat(rat(1, 2))), emul(ediv(Dt(c.X), c.sT), x_var()));
	return eadd(eadd(e1, e2), eadd(c.Th, emul(e_i(), c.Ps)));
}

inline expr phase_exponent(const etr2& c) {
	expr Tt = Dt(c.T);
	expr xx = eadd(emul(x_var(1), x_var(1)), emul(x_var(2), x_var(2)));
	expr e1 = emul(emul(e_i(), e_rat(rat(1, 8))), emul(ediv(Dt(Tt), Tt), xx));
	expr px = eadd(emul(c.o11, x_var(1)), emul(c.o12, x_var(2)));
	expr py = eadd(emul(c.o21, x_var(1)), emul(c.o22, x_var(2)));
	expr e2 = emul(emul(e_i(), e_rat(rat(1, 2))),
	               ediv(eadd(emul(Dt(c.X1), px), emul(Dt(c.X2), py)), c.sT));
	// modulus factor T_t^{-1/2} carried inside the exponent's real part
	return eadd(eadd(e1, e2), eadd(eneg(make_ln(c.sT)), emul(e_i(), c.Ps)));
}

// (2 T_ttt T_t - 3 T_tt^2) / (16 T_t^3): coefficient of the squared spatial
// coordinate added to the transformed element
inline expr quad_term(const expr& T) {
	expr Tt = Dt(T), Ttt = Dt(Tt), Tttt = Dt(Ttt);
	return ediv(esub(emul(e_int(2), emul(Tttt, Tt)), emul(e_int(3), emul(Ttt, Ttt))),
	            emul(e_int(16), emul(Tt, emul(Tt, Tt))));
}

// (1/2) sT^{-1} d/dt (X_t / T_t): coefficient of the linear spatial term
inline expr lin_term(const expr& Xc, const expr& T, const expr& sT) {
	return emul(e_rat(rat(1, 2)), ediv(Dt(ediv(Dt(Xc), Dt(T))), sT));
}

// old coordinates expressed through the new ones
inline subst_map inverse_point_map(const etr1& c) {
	expr ti = invert_time_map(c.T);
	subst_map s;
	s[coord_atom(0)] = ti;
	s[coord_atom(1)] = ediv(esub(x_var(), comp_t(c.X, ti)), comp_t(c.sT, ti));
	return s;
}

inline subst_map inverse_point_map(const etr2& c) {
	expr ti = invert_time_map(c.T);
	expr is = ediv(e_int(1), comp_t(c.sT, ti));
	expr d1 = esub(x_var(1), comp_t(c.X1, ti));
	expr d2 = esub(x_var(2), comp_t(c.X2, ti));
	subst_map s;
	s[coord_atom(0)] = ti;
	s[coord_atom(1)] = emul(is, eadd(emul(c.o11, d1), emul(c.o21, d2)));
	s[coord_atom(2)] = emul(is, eadd(emul(c.o12, d1), emul(c.o22, d2)));
	return s;
}

// continuous-part conjugation rules for moving the reflections through a
// composition:  Ix o C = conj_refl_x(C) o Ix,   It o C = conj_refl_t(C) o It
// modulus rescale by e^{-Th}, including occurrences folded into psi psi* pairs
inline subst_map modulus_rescale(const expr& Th) {
	expr es = make_exp(eneg(Th));
	subst_map m;
	m[a_rho()] = emul(rho_var(), es);
	m[a_jet(0, false, 0, 0, 0)] = emul(psi_var(), es);
	m[a_jet(0, true, 0, 0, 0)] = emul(psi_conj_var(), es);
	return m;
}

inline etr1 conj_refl_x(etr1 c) {
	c.X = eneg(c.X);
	c.phi0 = xrev(c.phi0);
	return c;
}

inline etr1 conj_refl_t(etr1 c) {
	c.T = eneg(trev(c.T));
	c.sT = trev(c.sT);
	c.X = trev(c.X);
	c.Th = trev(c.Th);
	c.Ps = eneg(trev(c.Ps));
	c.phi0 = conj(trev(c.phi0));
	return c;
}

inline etr2 conj_refl_t(etr2 c) {
	c.T = eneg(trev(c.T));
	c.sT = trev(c.sT);
	c.X1 = trev(c.X1);
	c.X2 = trev(c.X2);
	c.Ps = eneg(trev(c.Ps));
	return c;
}

}  // namespace detail

// ------------------------------------------------- composition & inversion

// composite of two members, the first argument applied first
inline etr1 compose(const etr1& g1, const etr1& g2) {
	detail::check_root(g1.sT, g1.T, "compose");
	detail::check_root(g2.sT, g2.T, "compose");
	etr1 a = g1;
	if (g2.it) a = detail::conj_refl_t(a);
	if (g2.ix) a = detail::conj_refl_x(a);
	const etr1& b = g2;
	expr sb_a = detail::comp_t(b.sT, a.T);
	expr T2t = Dt(b.T);
	etr1 r;
	r.T = detail::comp_t(b.T, a.T);
	r.sT = emul(sb_a, a.sT);
	r.X = eadd(emul(sb_a, a.X), detail::comp_t(b.X, a.T));
	r.Th = eadd(a.Th, detail::comp_t(b.Th, a.T));
	expr quad = detail::comp_t(emul(e_rat(rat(1, 8)), ediv(Dt(T2t), T2t)), a.T);
	expr lin = detail::comp_t(emul(e_rat(rat(1, 2)), ediv(Dt(b.X), b.sT)), a.T);
	r.Ps = eadd(eadd(a.Ps, detail::comp_t(b.Ps, a.T)),
	            eadd(emul(quad, emul(a.X, a.X)), emul(lin, a.X)));
	if (!is_zero(a.phi0) || !is_zero(b.phi0)) {
		subst_map fwd;
		fwd[coord_atom(0)] = a.T;
		fwd[coord_atom(1)] = eadd(emul(a.sT, x_var()), a.X);
		r.phi0 = eadd(emul(substitute(make_exp(detail::phase_exponent(b)), fwd), a.phi0),
		              substitute(b.phi0, fwd));
	}
	r.ix = (g1.ix != g2.ix);
	r.it = (g1.it != g2.it);
	return r;
}

inline etr2 compose(const etr2& g1, const etr2& g2) {
	detail::check_root(g1.sT, g1.T, "compose");
	detail::check_root(g2.sT, g2.T, "compose");
	etr2 a = g1;
	if (g2.it) a = detail::conj_refl_t(a);
	const etr2& b = g2;
	expr sb_a = detail::comp_t(b.sT, a.T);
	expr T2t = Dt(b.T);
	etr2 r;
	r.T = detail::comp_t(b.T, a.T);
	r.sT = emul(sb_a, a.sT);
	r.X1 = eadd(emul(sb_a, eadd(emul(b.o11, a.X1), emul(b.o12, a.X2))), detail::comp_t(b.X1, a.T));
	r.X2 = eadd(emul(sb_a, eadd(emul(b.o21, a.X1), emul(b.o22, a.X2))), detail::comp_t(b.X2, a.T));
	r.o11 = eadd(emul(b.o11, a.o11), emul(b.o12, a.o21));
	r.o12 = eadd(emul(b.o11, a.o12), emul(b.o12, a.o22));
	r.o21 = eadd(emul(b.o21, a.o11), emul(b.o22, a.o21));
	r.o22 = eadd(emul(b.o21, a.o12), emul(b.o22, a.o22));
	expr quad = detail::comp_t(emul(e_rat(rat(1, 8)), ediv(Dt(T2t), T2t)), a.T);
	expr l1 = detail::comp_t(emul(e_rat(rat(1, 2)), ediv(Dt(b.X1), b.sT)), a.T);
	expr l2 = detail::comp_t(emul(e_rat(rat(1, 2)), ediv(Dt(b.X2), b.sT)), a.T);
	expr xx = eadd(emul(a.X1, a.X1), emul(a.X2, a.X2));
	expr lx = eadd(emul(l1, eadd(emul(b.o11, a.X1), emul(b.o12, a.X2))),
	               emul(l2, eadd(emul(b.o21, a.X1), emul(b.o22, a.X2))));
	r.Ps = eadd(eadd(a.Ps, detail::comp_t(b.Ps, a.T)), eadd(emul(quad, xx), lx));
	r.it = (g1.it != g2.it);
	return r;
}

inline etr1 invert(const etr1& g) {
	detail::check_root(g.sT, g.T, "invert");
	expr ti = invert_time_map(g.T);
	expr Tt = Dt(g.T);
	etr1 r;
	r.T = ti;
	r.sT = ediv(e_int(1), detail::comp_t(g.sT, ti));
	r.X = eneg(ediv(detail::comp_t(g.X, ti), detail::comp_t(g.sT, ti)));
	r.Th = eneg(detail::comp_t(g.Th, ti));
	expr ps_old = eadd(eneg(g.Ps),
	                   eadd(eneg(emul(e_rat(rat(1, 8)), ediv(emul(Dt(Tt), emul(g.X, g.X)), emul(Tt, Tt)))),
	                        emul(e_rat(rat(1, 2)), ediv(emul(g.X, Dt(g.X)), Tt))));
	r.Ps = detail::comp_t(ps_old, ti);
	if (!is_zero(g.phi0)) {
		subst_map inv = detail::inverse_point_map(g);
		r.phi0 = eneg(substitute(emul(g.phi0, make_exp(eneg(detail::phase_exponent(g)))), inv));
	}
	etr1 c = r;
	if (g.ix) c = detail::conj_refl_x(c);
	if (g.it) c = detail::conj_refl_t(c);
	c.ix = g.ix;
	c.it = g.it;
	return c;
}

inline etr2 invert(const etr2& g) {
	detail::check_root(g.sT, g.T, "invert");
	expr ti = invert_time_map(g.T);
	expr Tt = Dt(g.T);
	expr is = ediv(e_int(1), detail::comp_t(g.sT, ti));
	expr x1i = detail::comp_t(g.X1, ti), x2i = detail::comp_t(g.X2, ti);
	etr2 r;
	r.T = ti;
	r.sT = is;
	r.X1 = eneg(emul(is, eadd(emul(g.o11, x1i), emul(g.o21, x2i))));
	r.X2 = eneg(emul(is, eadd(emul(g.o12, x1i), emul(g.o22, x2i))));
	r.o11 = g.o11;
	r.o12 = g.o21;
	r.o21 = g.o12;
	r.o22 = g.o22;
	expr xx = eadd(emul(g.X1, g.X1), emul(g.X2, g.X2));
	expr xxt = eadd(emul(g.X1, Dt(g.X1)), emul(g.X2, Dt(g.X2)));
	expr ps_old = eadd(eneg(g.Ps),
	                   eadd(eneg(emul(e_rat(rat(1, 8)), ediv(emul(Dt(Tt), xx), emul(Tt, Tt)))),
	                        emul(e_rat(rat(1, 2)), ediv(xxt, Tt))));
	r.Ps = detail::comp_t(ps_old, ti);
	etr2 c = r;
	if (g.it) c = detail::conj_refl_t(c);
	c.it = g.it;
	return c;
}

inline bool etr1_eq(const etr1& a, const etr1& b) {
	return a.ix == b.ix && a.it == b.it && is_zero(esub(a.T, b.T)) && is_zero(esub(a.sT, b.sT)) &&
	       is_zero(esub(a.X, b.X)) && is_zero(esub(a.Th, b.Th)) && is_zero(esub(a.Ps, b.Ps)) &&
	       is_zero(esub(a.phi0, b.phi0));
}

inline bool etr2_eq(const etr2& a, const etr2& b) {
	return a.it == b.it && is_zero(esub(a.T, b.T)) && is_zero(esub(a.sT, b.sT)) &&
	       is_zero(esub(a.X1, b.X1)) && is_zero(esub(a.X2, b.X2)) && is_zero(esub(a.Ps, b.Ps)) &&
	       is_zero(esub(a.o11, b.o11)) && is_zero(esub(a.o12, b.o12)) &&
	       is_zero(esub(a.o21, b.o21)) && is_zero(esub(a.o22, b.o22));
}

inline bool is_identity(const etr1& g) { return etr1_eq(g, etr1{}); }
inline bool is_identity(const etr2& g) { return etr2_eq(g, etr2{}); }

// signs of the space and the effective time orientation
inline int space_sign(const etr1& g) { return g.ix ? -1 : 1; }
inline int time_sign(const etr1& g) { return g.it ? -1 : 1; }

// ------------------------------------------------------------- membership

// the positive constant with e^Theta = kappa |T_t|^{-1/gamma} for members of
// the power-nonlinearity group; built factorwise so that constancy of the
// result stays decidable
inline expr kappa_of(const etr1& g, const expr& gamma) {
	mobius_data m = mobius_of(g.T);
	expr den = make_frac(g.T.den, p_const(1));
	expr part = emul(make_pow(m.det, ediv(e_int(1), gamma)),
	                 make_pow(den, eneg(ediv(e_int(2), gamma))));
	return emul(make_exp(g.Th), part);
}

inline bool validate_membership(const etr1& g, class_tag cls, const expr& gamma = e_zero()) {
	detail::check_root(g.sT, g.T, "validate_membership");
	switch (cls) {
	case class_tag::F:
		return true;
	case class_tag::Fprime:
		return !detail::depends_on_modulus(g.phi0);
	case class_tag::S:
		return is_zero(g.phi0);
	case class_tag::V:
		// the time map must be affine and the modulus scale constant: a
		// time-dependent scale would feed the time variable into a generic
		// nonlinearity, while a time-dependent phase only shifts the free
		// potential; constancy of the scale is also what closes the family
		// under composition, which generates phase drift from spatial shifts
		return is_zero(g.phi0) && is_zero(Dt(Dt(g.T))) && is_zero(Dt(g.Th));
	case class_tag::P0:
		return is_zero(g.phi0) && is_zero(Dt(Dt(g.T)));
	case class_tag::Pgamma: {
		if (is_zero(gamma)) throw kernel_error("power membership needs gamma != 0");
		// constancy of the scale is equivalent to the rational condition
		// gamma Theta_t T_t + T_tt = 0, which stays decidable for symbolic gamma
		expr cond = eadd(emul(gamma, emul(Dt(g.Th), Dt(g.T))), Dt(Dt(g.T)));
		return is_zero(g.phi0) && is_zero(cond);
	}
	case class_tag::Vf:
		throw kernel_error("fixed-nonlinearity membership takes the equation instance");
	default:
		throw kernel_error("two-dimensional class takes the two-dimensional transformation");
	}
}

inline bool validate_membership(const etr2& g) {
	detail::check_root(g.sT, g.T, "validate_membership");
	for (const expr* o : {&g.o11, &g.o12, &g.o21, &g.o22}) {
		if (detail::depends_on_modulus(*o)) return false;
		for (int d = 0; d < 3; ++d)
			if (mentions(*o, coord_atom(d))) return false;
	}
	return is_zero(esub(eadd(emul(g.o11, g.o11), emul(g.o21, g.o21)), e_int(1))) &&
	       is_zero(esub(eadd(emul(g.o12, g.o12), emul(g.o22, g.o22)), e_int(1))) &&
	       is_zero(eadd(emul(g.o11, g.o12), emul(g.o21, g.o22)));
}

inline bool validate_membership(const etr1& g, const equation_instance& inst) {
	if (inst.cls == class_tag::C) throw kernel_error("two-dimensional class takes the two-dimensional transformation");
	if (inst.cls == class_tag::Vf) {
		detail::check_root(g.sT, g.T, "validate_membership");
		if (!is_zero(g.phi0)) return false;
		if (!is_zero(esub(Dt(g.T), e_int(1)))) return false;
		// the reflected-time branch is admissible only for a real nonlinearity
		if (g.it && !is_zero(esub(conj(inst.f), inst.f))) return false;
		// the modulus rescale must fix the nonlinearity, since it is not free here
		return is_zero(esub(substitute(inst.f, detail::modulus_rescale(g.Th)), inst.f));
	}
	return validate_membership(g, inst.cls, inst.gamma);
}

inline bool validate_membership(const etr2& g, const equation_instance& inst) {
	if (inst.cls != class_tag::C) throw kernel_error("one-dimensional class takes the one-dimensional transformation");
	return validate_membership(g);
}

// --------------------------------------------------- action on the element

// transformed coefficient of psi for a member of the widest modular class;
// the result is written in the new variables via the inverse point map
inline expr push_arbitrary(const etr1& g, expr S) {
	detail::check_root(g.sT, g.T, "push_arbitrary");
	if (!is_zero(g.phi0)) throw kernel_error("push_arbitrary: additive psi component is outside the modular classes");
	if (g.it) S = detail::trev(conj(S));
	if (g.ix) S = detail::xrev(S);
	expr shat = substitute(S, detail::modulus_rescale(g.Th));
	expr Tt = Dt(g.T);
	expr out = eadd(ediv(shat, Tt), emul(detail::quad_term(g.T), emul(x_var(), x_var())));
	out = eadd(out, emul(detail::lin_term(g.X, g.T, g.sT), x_var()));
	out = eadd(out, ediv(esub(Dt(g.Ps), emul(e_i(), Dt(g.Th))), Tt));
	out = esub(out, ediv(eadd(emul(Dt(g.X), Dt(g.X)), emul(e_i(), Dt(Tt))), emul(e_int(4), emul(Tt, Tt))));
	return substitute(out, detail::inverse_point_map(g));
}

// transformed instance; the shape of the result is revalidated by the
// instance constructors
inline equation_instance push_element(const etr1& g, const equation_instance& inst) {
	if (!validate_membership(g, inst)) throw kernel_error("push_element: transformation is outside the class group");
	if (inst.cls == class_tag::S) return make_instance_S(push_arbitrary(g, inst.S), inst.nx);

	expr V = inst.V;
	if (g.it) V = detail::trev(conj(V));
	if (g.ix) V = detail::xrev(V);
	expr Tt = Dt(g.T);
	subst_map inv = detail::inverse_point_map(g);
	expr lin = emul(detail::lin_term(g.X, g.T, g.sT), x_var());
	expr kin = ediv(emul(Dt(g.X), Dt(g.X)), emul(e_int(4), emul(Tt, Tt)));

	if (inst.cls == class_tag::V || inst.cls == class_tag::Vf) {
		expr f = g.it ? conj(inst.f) : inst.f;
		expr fnew = substitute(ediv(substitute(f, detail::modulus_rescale(g.Th)), Tt), inv);
		expr out = eadd(ediv(V, Tt), emul(detail::quad_term(g.T), emul(x_var(), x_var())));
		out = eadd(out, lin);
		out = eadd(out, ediv(esub(Dt(g.Ps), emul(e_i(), Dt(g.Th))), Tt));
		out = esub(out, eadd(kin, ediv(emul(e_i(), Dt(Tt)), emul(e_int(4), emul(Tt, Tt)))));
		return make_instance_V(fnew, substitute(out, inv), inst.cls);
	}
	if (inst.cls == class_tag::P0) {
		expr sig = g.it ? conj(inst.sigma) : inst.sigma;
		expr out = eadd(ediv(esub(V, emul(sig, g.Th)), Tt), lin);
		out = eadd(out, ediv(esub(Dt(g.Ps), emul(e_i(), Dt(g.Th))), Tt));
		out = esub(out, kin);
		return make_instance_P0(ediv(sig, Tt), substitute(out, inv));
	}
	if (inst.cls == class_tag::Pgamma) {
		expr sig = g.it ? conj(inst.sigma) : inst.sigma;
		// kappa^gamma = e^{gamma Theta} T_t, exact by the exp/ln folds
		expr kg = emul(make_exp(emul(inst.gamma, g.Th)), Tt);
		expr out = eadd(ediv(V, Tt), emul(detail::quad_term(g.T), emul(x_var(), x_var())));
		out = eadd(out, lin);
		out = eadd(out, esub(ediv(Dt(g.Ps), Tt), kin));
		out = eadd(out, emul(emul(e_i(), gamma_prime(inst.gamma)), ediv(Dt(Tt), emul(Tt, Tt))));
		return make_instance_Pgamma(ediv(sig, kg), inst.gamma, substitute(out, inv));
	}
	throw kernel_error("push_element: unhandled class");
}

inline equation_instance push_element(const etr2& g, const equation_instance& inst) {
	if (!validate_membership(g, inst)) throw kernel_error("push_element: transformation is outside the class group");
	expr V = inst.V;
	if (g.it) V = detail::trev(conj(V));
	expr Tt = Dt(g.T);
	expr xx = eadd(emul(x_var(1), x_var(1)), emul(x_var(2), x_var(2)));
	expr out = eadd(ediv(V, Tt), emul(detail::quad_term(g.T), xx));
	expr l1 = detail::lin_term(g.X1, g.T, g.sT);
	expr l2 = detail::lin_term(g.X2, g.T, g.sT);
	out = eadd(out, emul(eadd(emul(l1, g.o11), emul(l2, g.o21)), x_var(1)));
	out = eadd(out, emul(eadd(emul(l1, g.o12), emul(l2, g.o22)), x_var(2)));
	out = eadd(out, ediv(Dt(g.Ps), Tt));
	expr xt2 = eadd(emul(Dt(g.X1), Dt(g.X1)), emul(Dt(g.X2), Dt(g.X2)));
	out = esub(out, ediv(xt2, emul(e_int(4), emul(Tt, Tt))));
	return make_instance_C(substitute(out, detail::inverse_point_map(g)));
}

// --------------------------------------------- push-forward of vector fields

// components of the transformed field in the new variables: the field is
// applied to the point map and the inverse map is substituted, with psi
// compensated by the phase multiplier
inline vfield push_field(const etr1& g, const vfield& q) {
	if (q.nx != 1 || q.ncomp != 1) throw kernel_error("push_field: one-dimensional single-component fields only");
	detail::check_root(g.sT, g.T, "push_field");
	if (!is_zero(g.phi0)) throw kernel_error("push_field: additive psi component is outside the modular classes");
	vfield r = q;
	if (g.it) {
		subst_map s;
		s[coord_atom(0)] = eneg(t_var());
		s[a_jet(0, false, 0, 0, 0)] = psi_conj_var();
		s[a_jet(0, true, 0, 0, 0)] = psi_var();
		expr et = r.eta[0];
		r.xi_t = eneg(substitute(r.xi_t, s));
		r.xi[0] = substitute(r.xi[0], s);
		r.eta[0] = substitute(conj(et), s);
	}
	if (g.ix) {
		subst_map s;
		s[coord_atom(1)] = eneg(x_var());
		r.xi_t = substitute(r.xi_t, s);
		r.xi[0] = eneg(substitute(r.xi[0], s));
		r.eta[0] = substitute(r.eta[0], s);
	}
	expr E = detail::phase_exponent(g);
	expr P = make_exp(E);
	expr xmap = eadd(emul(g.sT, x_var()), g.X);
	expr xt_new = emul(r.xi_t, Dt(g.T));
	expr xx_new = eadd(emul(r.xi_t, Dt(xmap)), emul(r.xi[0], g.sT));
	expr eta_new = eadd(emul(emul(eadd(emul(r.xi_t, Dt(E)), emul(r.xi[0], Dx(E, 1))), P), psi_var()),
	                    emul(P, r.eta[0]));
	subst_map inv = detail::inverse_point_map(g);
	expr pback = substitute(make_exp(eneg(E)), inv);
	subst_map full = inv;
	full[a_jet(0, false, 0, 0, 0)] = emul(psi_var(), pback);
	full[a_jet(0, true, 0, 0, 0)] = emul(psi_conj_var(), conj(pback));
	full[a_rho()] = emul(rho_var(), substitute(make_exp(eneg(g.Th)), inv));
	vfield out = vf_zero(1, 1);
	out.xi_t = substitute(xt_new, full);
	out.xi[0] = substitute(xx_new, full);
	out.eta[0] = substitute(eta_new, full);
	return out;
}

inline vfield push_field(const etr2& g, const vfield& q) {
	if (q.nx != 2 || q.ncomp != 1) throw kernel_error("push_field: two-dimensional single-component fields only");
	detail::check_root(g.sT, g.T, "push_field");
	vfield r = q;
	if (g.it) {
		subst_map s;
		s[coord_atom(0)] = eneg(t_var());
		s[a_jet(0, false, 0, 0, 0)] = psi_conj_var();
		s[a_jet(0, true, 0, 0, 0)] = psi_var();
		expr et = r.eta[0];
		r.xi_t = eneg(substitute(r.xi_t, s));
		r.xi[0] = substitute(r.xi[0], s);
		r.xi[1] = substitute(r.xi[1], s);
		r.eta[0] = substitute(conj(et), s);
	}
	expr E = detail::phase_exponent(g);
	expr P = make_exp(E);
	expr x1map = eadd(emul(g.sT, eadd(emul(g.o11, x_var(1)), emul(g.o12, x_var(2)))), g.X1);
	expr x2map = eadd(emul(g.sT, eadd(emul(g.o21, x_var(1)), emul(g.o22, x_var(2)))), g.X2);
	expr xt_new = emul(r.xi_t, Dt(g.T));
	expr x1_new = eadd(emul(r.xi_t, Dt(x1map)),
	                   emul(g.sT, eadd(emul(g.o11, r.xi[0]), emul(g.o12, r.xi[1]))));
	expr x2_new = eadd(emul(r.xi_t, Dt(x2map)),
	                   emul(g.sT, eadd(emul(g.o21, r.xi[0]), emul(g.o22, r.xi[1]))));
	expr qe = eadd(emul(r.xi_t, Dt(E)), eadd(emul(r.xi[0], Dx(E, 1)), emul(r.xi[1], Dx(E, 2))));
	expr eta_new = eadd(emul(emul(qe, P), psi_var()), emul(P, r.eta[0]));
	subst_map inv = detail::inverse_point_map(g);
	expr pback = substitute(make_exp(eneg(E)), inv);
	subst_map full = inv;
	full[a_jet(0, false, 0, 0, 0)] = emul(psi_var(), pback);
	full[a_jet(0, true, 0, 0, 0)] = emul(psi_conj_var(), conj(pback));
	vfield out = vf_zero(2, 1);
	out.xi_t = substitute(xt_new, full);
	out.xi[0] = substitute(x1_new, full);
	out.xi[1] = substitute(x2_new, full);
	out.eta[0] = substitute(eta_new, full);
	return out;
}

}  // namespace nlsym
