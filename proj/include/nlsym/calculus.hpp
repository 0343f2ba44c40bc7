#pragma once

// Differentiation, substitution, and coefficient splitting on kernel expressions.
//
// Two derivative modes:
//   d_tot(dir)  total derivative along a base coordinate (t, x1, x2); jet
//               atoms promote their multiindex, composite atoms chain.
//   d_by(a)     derivative by one atom treated as the independent variable;
//               every other non-composite atom is held fixed.

#include "symcore.hpp"

#include <functional>

namespace nlsym {

struct dvar {
	int dir = -1;     // >= 0: total derivative along coordinate dir
	atom_id a = -1;   // else: derivative by this atom
};

inline dvar d_tot(int dir) { return dvar{dir, -1}; }
inline dvar d_by(atom_id a) { return dvar{-1, a}; }

expr deriv(const expr& e, const dvar& v);

inline expr datom(atom_id at, const dvar& v) {
	if (v.dir < 0 && at == v.a) return e_rat(1);
	const atom_data& d = adat(at);
	switch (d.kind) {
		case atom_kind::sym:
			if (v.dir >= 0 && at == coord_atom(v.dir)) return e_rat(1);
			return e_zero();
		case atom_kind::csym:
		case atom_kind::sign_sym:
		case atom_kind::imag_unit:
			return e_zero();
		case atom_kind::jet: {
			if (v.dir < 0) return e_zero();
			std::array<int, 3> j = d.jmi;
			j[v.dir] += 1;
			return e_atom(a_jet(d.comp, d.conj_half, j[0], j[1], j[2]));
		}
		case atom_kind::rho_mod: {
			// rho^2 = psi psi*, so 2 rho drho = psi* dpsi + psi dpsi*
			expr ps = e_atom(a_jet(0, false, 0, 0, 0));
			expr pc = e_atom(a_jet(0, true, 0, 0, 0));
			expr dps = datom(a_jet(0, false, 0, 0, 0), v);
			expr dpc = datom(a_jet(0, true, 0, 0, 0), v);
			if (dps.num.zero() && dpc.num.zero()) return e_zero();
			return ediv(eadd(emul(pc, dps), emul(ps, dpc)), emul(e_int(2), e_atom(at)));
		}
		case atom_kind::polar_ang: {
			expr x1 = e_atom(coord_atom(1));
			expr x2 = e_atom(coord_atom(2));
			expr d1 = datom(coord_atom(1), v);
			expr d2 = datom(coord_atom(2), v);
			if (d1.num.zero() && d2.num.zero()) return e_zero();
			return ediv(esub(emul(x1, d2), emul(x2, d1)), eadd(emul(x1, x1), emul(x2, x2)));
		}
		case atom_kind::exp_fn:
			return emul(e_atom(at), deriv(d.args[0], v));
		case atom_kind::ln_fn:
			return ediv(deriv(d.args[0], v), d.args[0]);
		case atom_kind::pow_fn: {
			expr de = deriv(d.args[1], v);
			expr db = deriv(d.args[0], v);
			expr r = e_zero();
			if (!de.num.zero()) r = emul(emul(de, make_ln(d.args[0])), e_atom(at));
			if (!db.num.zero())
				r = eadd(r, emul(emul(d.args[1], db), make_pow(d.args[0], esub(d.args[1], e_rat(1)))));
			return r;
		}
		case atom_kind::ufunc: {
			expr r = e_zero();
			for (size_t s = 0; s < d.args.size(); ++s) {
				expr da = deriv(d.args[s], v);
				if (da.num.zero()) continue;
				std::vector<int> f = d.fmi;
				f[s] += 1;
				r = eadd(r, emul(e_atom(a_ufunc(d.name, f, d.args, d.conj_half)), da));
			}
			return r;
		}
		case atom_kind::antider:
			if (v.dir == 0 || (v.dir < 0 && v.a == coord_atom(0))) return d.args[0];
			return e_zero();
	}
	return e_zero();
}

inline expr dpoly(const poly& p, const dvar& v) {
	expr r = e_zero();
	for (auto& [m, c] : p.t)
		for (size_t i = 0; i < m.size(); ++i) {
			expr da = datom(m[i].first, v);
			if (da.num.zero()) continue;
			mono mm;
			for (size_t j = 0; j < m.size(); ++j) {
				int e = m[j].second - (i == j ? 1 : 0);
				if (e != 0) mm.emplace_back(m[j].first, e);
			}
			poly rest;
			rest.t[mm] = c * m[i].second;
			r = eadd(r, emul(expr{std::move(rest), p_const(1)}, da));
		}
	return r;
}

inline expr deriv(const expr& e, const dvar& v) {
	expr dn = dpoly(e.num, v);
	if (e.den.is_const()) return ediv(dn, e_rat(e.den.const_val()));
	expr dd = dpoly(e.den, v);
	expr den = expr{e.den, p_const(1)};
	expr num = expr{e.num, p_const(1)};
	return ediv(esub(emul(dn, den), emul(num, dd)), emul(den, den));
}

inline expr Dt(const expr& e) { return deriv(e, d_tot(0)); }
inline expr Dx(const expr& e, int dir = 1) { return deriv(e, d_tot(dir)); }
inline expr pd(const expr& e, atom_id a) { return deriv(e, d_by(a)); }

inline expr deriv_n(expr e, const dvar& v, int n) {
	for (int k = 0; k < n; ++k) e = deriv(e, v);
	return e;
}

// ---------------------------------------------------------------- mentions

inline void collect_atoms_deep(const expr& e, std::set<atom_id>& out) {
	for (const poly* p : {&e.num, &e.den})
		for (auto& [m, c] : p->t)
			for (auto& [a, k] : m)
				if (out.insert(a).second)
					for (auto& arg : adat(a).args) collect_atoms_deep(arg, out);
}

inline std::set<atom_id> atoms_of(const expr& e) {
	std::set<atom_id> s;
	collect_atoms_deep(e, s);
	return s;
}

inline bool mentions(const expr& e, atom_id a) { return atoms_of(e).count(a) != 0; }

inline bool mentions_any(const expr& e, const std::set<atom_id>& vars) {
	auto s = atoms_of(e);
	for (atom_id a : vars)
		if (s.count(a)) return true;
	return false;
}

// ------------------------------------------------------------- substitution

using subst_map = std::map<atom_id, expr>;

expr substitute(const expr& e, const subst_map& s);

inline expr subst_atom(atom_id at, const subst_map& s) {
	auto it = s.find(at);
	if (it != s.end()) return it->second;
	const atom_data& d = adat(at);
	if (d.args.empty()) return e_atom(at);
	bool changed = false;
	std::vector<expr> na;
	na.reserve(d.args.size());
	for (auto& arg : d.args) {
		expr sa = substitute(arg, s);
		changed = changed || !expr_same(sa, arg);
		na.push_back(std::move(sa));
	}
	if (!changed) return e_atom(at);
	switch (d.kind) {
		case atom_kind::exp_fn:
			return make_exp(na[0]);
		case atom_kind::ln_fn:
			return make_ln(na[0]);
		case atom_kind::pow_fn:
			return make_pow(na[0], na[1]);
		case atom_kind::ufunc:
			return e_atom(a_ufunc(d.name, d.fmi, na, d.conj_half));
		case atom_kind::antider:
			return e_atom(a_antider(na[0]));
		default:
			throw kernel_error("substitute: unexpected composite atom");
	}
}

inline expr substitute_poly(const poly& p, const subst_map& s) {
	expr r = e_zero();
	for (auto& [m, c] : p.t) {
		expr term = e_rat(c);
		for (auto& [a, e] : m) term = emul(term, epow(subst_atom(a, s), e));
		r = eadd(r, term);
	}
	return r;
}

inline expr substitute(const expr& e, const subst_map& s) {
	if (s.empty()) return e;
	expr n = substitute_poly(e.num, s);
	if (e.den.is_const()) return ediv(n, e_rat(e.den.const_val()));
	return ediv(n, substitute_poly(e.den, s));
}

// replace every derivative atom of the named unknown function by the matching
// derivative of a concrete body written in the given parameter symbols
inline expr substitute_function(const expr& e, const std::string& name, const std::vector<atom_id>& params,
                                const expr& body) {
	subst_map s;
	for (atom_id at : atoms_of(e)) {
		const atom_data& d = adat(at);
		if (d.kind != atom_kind::ufunc || d.name != name) continue;
		if (d.args.size() != params.size()) throw kernel_error("substitute_function: arity mismatch");
		expr rep = body;
		for (size_t sl = 0; sl < params.size(); ++sl) rep = deriv_n(rep, d_by(params[sl]), d.fmi[sl]);
		if (d.conj_half) rep = conj(rep);
		subst_map am;
		for (size_t sl = 0; sl < params.size(); ++sl) am[params[sl]] = d.args[sl];
		s[at] = substitute(rep, am);
	}
	return substitute(e, s);
}

// ------------------------------------------------------------------ splitting

// coefficients of an expression viewed as polynomial in the given atoms;
// requires the split atoms free of the denominator and of composite-atom args
inline std::map<mono, expr, mono_cmp> split_in(const expr& e, const std::set<atom_id>& vars) {
	for (auto& [m, c] : e.den.t)
		for (auto& [a, k] : m)
			if (vars.count(a) || mentions_any(e_atom(a), vars))
				throw kernel_error("split_in: split atom in denominator");
	std::map<mono, expr, mono_cmp> parts;
	for (auto& [m, c] : e.num.t) {
		mono vm, rest;
		for (auto& [a, k] : m) {
			if (vars.count(a)) {
				vm.emplace_back(a, k);
			} else {
				if (mentions_any(e_atom(a), vars)) throw kernel_error("split_in: split atom inside composite");
				rest.emplace_back(a, k);
			}
		}
		poly rp;
		rp.t[rest] = c;
		expr coeff = make_frac(std::move(rp), e.den);
		auto it = parts.find(vm);
		if (it == parts.end())
			parts.emplace(std::move(vm), std::move(coeff));
		else
			it->second = eadd(it->second, coeff);
	}
	return parts;
}

inline expr recombine(const std::map<mono, expr, mono_cmp>& parts) {
	expr r = e_zero();
	for (auto& [m, c] : parts) {
		poly mp;
		mp.t[m] = 1;
		r = eadd(r, emul(expr{std::move(mp), p_const(1)}, c));
	}
	return r;
}

}  // namespace nlsym
