#pragma once

// Vector fields on (t, x, psi, psi*), their brackets and prolongations, the
// generator family used throughout, on-shell restriction by the evolution
// equation, and exact rational linear algebra for spans, closure, and
// dimension counts.

#include "calculus.hpp"

#include <functional>
#include <optional>

namespace nlsym {

inline expr t_var() { return e_atom(coord_atom(0)); }
inline expr x_var(int dir = 1) { return e_atom(coord_atom(dir)); }
inline expr psi_var(int comp = 0) { return e_atom(a_jet(comp, false, 0, 0, 0)); }
inline expr psi_conj_var(int comp = 0) { return e_atom(a_jet(comp, true, 0, 0, 0)); }
inline expr rho_var() { return e_atom(a_rho()); }

// first-order field  xi_t d_t + sum_j xi[j] d_xj + sum_a (eta[a] d_psi^a + conj(eta[a]) d_psi^a*)
struct vfield {
	int nx = 1;
	int ncomp = 1;
	expr xi_t = e_zero();
	std::vector<expr> xi;
	std::vector<expr> eta;
};

inline vfield vf_zero(int nx = 1, int ncomp = 1) {
	vfield q;
	q.nx = nx;
	q.ncomp = ncomp;
	q.xi.assign(size_t(nx), e_zero());
	q.eta.assign(size_t(ncomp), e_zero());
	return q;
}

inline std::vector<expr> vf_slots(const vfield& q) {
	std::vector<expr> s;
	s.reserve(1 + q.xi.size() + q.eta.size());
	s.push_back(q.xi_t);
	for (auto& e : q.xi) s.push_back(e);
	for (auto& e : q.eta) s.push_back(e);
	return s;
}

inline bool vf_is_zero(const vfield& q) {
	for (auto& s : vf_slots(q))
		if (!is_zero(s)) return false;
	return true;
}

inline bool vf_eq(const vfield& a, const vfield& b) {
	if (a.nx != b.nx || a.ncomp != b.ncomp) return false;
	auto sa = vf_slots(a);
	auto sb = vf_slots(b);
	for (size_t k = 0; k < sa.size(); ++k)
		if (!eq(sa[k], sb[k])) return false;
	return true;
}

inline vfield vf_add(const vfield& a, const vfield& b) {
	if (a.nx != b.nx || a.ncomp != b.ncomp) throw kernel_error("vf_add: shape mismatch");
	vfield r = a;
	r.xi_t = eadd(r.xi_t, b.xi_t);
	for (size_t j = 0; j < r.xi.size(); ++j) r.xi[j] = eadd(r.xi[j], b.xi[j]);
	for (size_t j = 0; j < r.eta.size(); ++j) r.eta[j] = eadd(r.eta[j], b.eta[j]);
	return r;
}

inline vfield vf_scale(const vfield& a, const expr& s) {
	vfield r = a;
	r.xi_t = emul(r.xi_t, s);
	for (auto& e : r.xi) e = emul(e, s);
	for (auto& e : r.eta) e = emul(e, s);
	return r;
}

inline vfield vf_neg(const vfield& a) { return vf_scale(a, e_int(-1)); }

// action on a function of the base coordinates and zero-order jets
inline expr vf_apply(const vfield& q, const expr& f) {
	expr r = emul(q.xi_t, deriv(f, d_by(coord_atom(0))));
	for (int j = 0; j < q.nx; ++j) r = eadd(r, emul(q.xi[size_t(j)], deriv(f, d_by(coord_atom(1 + j)))));
	for (int a = 0; a < q.ncomp; ++a) {
		r = eadd(r, emul(q.eta[size_t(a)], deriv(f, d_by(a_jet(a, false, 0, 0, 0)))));
		r = eadd(r, emul(conj(q.eta[size_t(a)]), deriv(f, d_by(a_jet(a, true, 0, 0, 0)))));
	}
	return r;
}

inline vfield bracket(const vfield& a, const vfield& b) {
	if (a.nx != b.nx || a.ncomp != b.ncomp) throw kernel_error("bracket: shape mismatch");
	vfield r = vf_zero(a.nx, a.ncomp);
	r.xi_t = esub(vf_apply(a, b.xi_t), vf_apply(b, a.xi_t));
	for (size_t j = 0; j < r.xi.size(); ++j) r.xi[j] = esub(vf_apply(a, b.xi[j]), vf_apply(b, a.xi[j]));
	for (size_t j = 0; j < r.eta.size(); ++j) r.eta[j] = esub(vf_apply(a, b.eta[j]), vf_apply(b, a.eta[j]));
	return r;
}

inline vfield jacobi_sum(const vfield& a, const vfield& b, const vfield& c) {
	return vf_add(vf_add(bracket(bracket(a, b), c), bracket(bracket(b, c), a)), bracket(bracket(c, a), b));
}

// ------------------------------------------------------------- prolongation

// jet coefficients phi^J up to the given total order, both conjugation halves
inline std::map<atom_id, expr> prolong(const vfield& q, int order) {
	std::map<atom_id, expr> phi;
	std::vector<expr> xiv;
	xiv.push_back(q.xi_t);
	for (int j = 0; j < q.nx; ++j) xiv.push_back(q.xi[size_t(j)]);
	for (int a = 0; a < q.ncomp; ++a) {
		phi[a_jet(a, false, 0, 0, 0)] = q.eta[size_t(a)];
		phi[a_jet(a, true, 0, 0, 0)] = conj(q.eta[size_t(a)]);
	}
	std::set<std::array<int, 3>> level{{{0, 0, 0}}};
	for (int d = 1; d <= order; ++d) {
		std::set<std::array<int, 3>> next;
		for (auto& J : level)
			for (int i = 0; i <= q.nx; ++i) {
				auto J2 = J;
				J2[size_t(i)] += 1;
				if (!next.insert(J2).second) continue;
				for (int a = 0; a < q.ncomp; ++a)
					for (int st = 0; st < 2; ++st) {
						expr v = deriv(phi.at(a_jet(a, st != 0, J[0], J[1], J[2])), d_tot(i));
						for (int k = 0; k <= q.nx; ++k) {
							auto Jk = J;
							Jk[size_t(k)] += 1;
							v = esub(v, emul(e_atom(a_jet(a, st != 0, Jk[0], Jk[1], Jk[2])),
							                 deriv(xiv[size_t(k)], d_tot(i))));
						}
						phi[a_jet(a, st != 0, J2[0], J2[1], J2[2])] = v;
					}
			}
		level = std::move(next);
	}
	return phi;
}

// ------------------------------------------------- on-shell jet substitution

// i psi_t + sum_j psi_jj + S psi = 0 solved for every t-derivative jet that a
// second prolongation can produce
inline subst_map manifold_rules(const expr& S, int nx) {
	expr psi = psi_var();
	expr lap = e_zero();
	for (int j = 1; j <= nx; ++j) {
		std::array<int, 3> J{{0, 0, 0}};
		J[size_t(j)] = 2;
		lap = eadd(lap, e_atom(a_jet(0, false, J[0], J[1], J[2])));
	}
	expr base = emul(e_i(), eadd(lap, emul(S, psi)));
	subst_map rules;
	for (int r1 = 0; r1 <= 2; ++r1)
		for (int r2 = 0; r2 <= (nx == 2 ? 2 - r1 : 0); ++r2) {
			expr v = base;
			for (int k = 0; k < r1; ++k) v = Dx(v, 1);
			for (int k = 0; k < r2; ++k) v = Dx(v, 2);
			rules[a_jet(0, false, 1, r1, r2)] = v;
			rules[a_jet(0, true, 1, r1, r2)] = conj(v);
		}
	expr vt = substitute(Dt(base), rules);
	rules[a_jet(0, false, 2, 0, 0)] = vt;
	rules[a_jet(0, true, 2, 0, 0)] = conj(vt);
	return rules;
}

inline expr restrict_manifold(const expr& e, const expr& S, int nx) {
	return substitute(e, manifold_rules(S, nx));
}

// infinitesimal invariance defect of the evolution equation under q
inline expr invariance_residual(const vfield& q, const expr& S) {
	auto phi = prolong(q, 2);
	expr r = emul(e_i(), phi.at(a_jet(0, false, 1, 0, 0)));
	for (int j = 1; j <= q.nx; ++j) {
		std::array<int, 3> J{{0, 0, 0}};
		J[size_t(j)] = 2;
		r = eadd(r, phi.at(a_jet(0, false, J[0], J[1], J[2])));
	}
	r = eadd(r, emul(vf_apply(q, S), psi_var()));
	r = eadd(r, emul(S, phi.at(a_jet(0, false, 0, 0, 0))));
	return restrict_manifold(r, S, q.nx);
}

// --------------------------------------------------------------- generators

inline expr uf_t(const std::string& name, int der = 0) {
	return e_atom(a_ufunc(name, {der}, {t_var()}));
}

inline vfield gen_M(int nx = 1) {
	vfield q = vf_zero(nx);
	q.eta[0] = emul(e_i(), psi_var());
	return q;
}

inline vfield gen_Ifield(int nx = 1) {
	vfield q = vf_zero(nx);
	q.eta[0] = psi_var();
	return q;
}

inline vfield gen_lam_M(const expr& lam, int nx = 1) {
	vfield q = vf_zero(nx);
	q.eta[0] = emul(emul(e_i(), lam), psi_var());
	return q;
}

inline vfield gen_zeta_I(const expr& zeta, int nx = 1) {
	vfield q = vf_zero(nx);
	q.eta[0] = emul(zeta, psi_var());
	return q;
}

// time reparametrization with its quadratic phase tail
inline vfield gen_D1(const expr& tau) {
	vfield q = vf_zero(1);
	expr x = x_var();
	q.xi_t = tau;
	q.xi[0] = emul(e_rat(make_rat(1, 2)), emul(Dt(tau), x));
	q.eta[0] = emul(emul(e_rat(make_rat(1, 8)), emul(e_i(), emul(Dt(Dt(tau)), emul(x, x)))), psi_var());
	return q;
}

// spatial shift with its linear phase tail
inline vfield gen_G1(const expr& chi) {
	vfield q = vf_zero(1);
	q.xi[0] = chi;
	q.eta[0] = emul(emul(e_rat(make_rat(1, 2)), emul(e_i(), emul(Dt(chi), x_var()))), psi_var());
	return q;
}

// power-nonlinearity dilation: the time part compensated by amplitude scaling
inline vfield gen_Dgamma(const expr& tau, const rat& gamma) {
	if (gamma == 0) throw kernel_error("gen_Dgamma: gamma must be nonzero");
	vfield q = gen_D1(tau);
	q.eta[0] = esub(q.eta[0], emul(emul(e_rat(rat(1) / gamma), Dt(tau)), psi_var()));
	return q;
}

// logarithmic-nonlinearity replacement for the amplitude generator
inline vfield gen_Iprime(const expr& s1, const expr& s2) {
	vfield q = vf_zero(1);
	if (is_zero(s2)) {
		// I + s1 t M
		q.eta[0] = emul(eadd(e_rat(1), emul(emul(e_i(), s1), t_var())), psi_var());
	} else {
		// e^{-s2 t} (s2 I - s1 M)
		expr damp = make_exp(emul(eneg(s2), t_var()));
		q.eta[0] = emul(emul(damp, esub(s2, emul(e_i(), s1))), psi_var());
	}
	return q;
}

inline expr integrate_t(const expr& e);

// logarithmic-nonlinearity replacement for the shift generator:
// G(chi) - cint I - s1 (int e^{-s2 t} cint dt) M with cint = int e^{s2 t} w chi dt
inline vfield gen_Gprime(const expr& chi, const expr& s1, const expr& s2, const expr& w) {
	vfield q = gen_G1(chi);
	expr cint = integrate_t(emul(make_exp(emul(s2, t_var())), emul(w, chi)));
	expr damped = emul(make_exp(emul(eneg(s2), t_var())), cint);
	expr mtail = integrate_t(damped);
	q.eta[0] = esub(q.eta[0], emul(damped, psi_var()));
	q.eta[0] = esub(q.eta[0], emul(emul(emul(e_i(), s1), mtail), psi_var()));
	return q;
}

inline vfield gen_J() {
	vfield q = vf_zero(2);
	q.xi[0] = eneg(x_var(2));
	q.xi[1] = x_var(1);
	return q;
}

inline vfield gen_D2(const expr& tau) {
	vfield q = vf_zero(2);
	expr x1 = x_var(1);
	expr x2 = x_var(2);
	q.xi_t = tau;
	q.xi[0] = emul(e_rat(make_rat(1, 2)), emul(Dt(tau), x1));
	q.xi[1] = emul(e_rat(make_rat(1, 2)), emul(Dt(tau), x2));
	expr r2 = eadd(emul(x1, x1), emul(x2, x2));
	expr coeff = esub(emul(e_rat(make_rat(1, 8)), emul(e_i(), emul(Dt(Dt(tau)), r2))),
	                  emul(e_rat(make_rat(1, 2)), Dt(tau)));
	q.eta[0] = emul(coeff, psi_var());
	return q;
}

inline vfield gen_G2(const expr& s1, const expr& s2) {
	vfield q = vf_zero(2);
	q.xi[0] = s1;
	q.xi[1] = s2;
	expr lin = eadd(emul(Dt(s1), x_var(1)), emul(Dt(s2), x_var(2)));
	q.eta[0] = emul(emul(e_rat(make_rat(1, 2)), emul(e_i(), lin)), psi_var());
	return q;
}

inline vfield gen_chi_M2(const expr& chi) {
	vfield q = vf_zero(2);
	q.eta[0] = emul(emul(e_i(), chi), psi_var());
	return q;
}

// ------------------------------------------------------------ t-integration

inline bool t_free(const expr& e) { return !mentions(e, coord_atom(0)); }

// closed forms for sums of  c * t^k * exp(u)  with d(u)/dt free of t;
// anything else stays as an opaque antiderivative atom
inline expr integrate_t(const expr& e) {
	if (e.num.zero()) return e_zero();
	expr den = expr{e.den, p_const(1)};
	if (!t_free(den)) return e_atom(a_antider(e));
	expr r = e_zero();
	for (auto& [m, c] : e.num.t) {
		long tdeg = 0;
		expr expu = e_zero();
		bool have_exp = false;
		bool opaque = false;
		mono rest;
		for (auto& [a, k] : m) {
			if (a == coord_atom(0)) {
				tdeg = k;
			} else if (adat(a).kind == atom_kind::exp_fn && k == 1 && !have_exp) {
				expu = adat(a).args[0];
				have_exp = true;
			} else if (mentions(e_atom(a), coord_atom(0))) {
				opaque = true;
			} else {
				rest.emplace_back(a, k);
			}
		}
		poly cp;
		cp.t[rest] = c;
		expr coeff = ediv(expr{std::move(cp), p_const(1)}, den);
		expr a_rate = have_exp ? Dt(expu) : e_zero();
		if (!opaque && have_exp && !t_free(a_rate)) opaque = true;
		if (opaque) {
			poly mp;
			mp.t[m] = c;
			r = eadd(r, e_atom(a_antider(ediv(expr{std::move(mp), p_const(1)}, den))));
			continue;
		}
		if (!have_exp || is_zero(a_rate)) {
			expr E = have_exp ? make_exp(expu) : e_rat(1);
			expr tp = epow(t_var(), tdeg + 1);
			r = eadd(r, emul(coeff, emul(E, ediv(tp, e_int(tdeg + 1)))));
			continue;
		}
		// I_k = t^k e^u / a - (k/a) I_{k-1};  I_0 = e^u / a
		expr E = make_exp(expu);
		expr I = ediv(E, a_rate);
		for (long k = 1; k <= tdeg; ++k)
			I = esub(ediv(emul(epow(t_var(), k), E), a_rate), emul(ediv(e_int(k), a_rate), I));
		r = eadd(r, emul(coeff, I));
	}
	return r;
}

// ------------------------------------------------------------ ODE reduction

// rewrite rule  d^order f / dt^order = rhs  for a one-argument unknown of t
struct ode_rule {
	std::string fname;
	int order = 2;
	expr rhs;
};

inline expr reduce_odes(expr e, const std::vector<ode_rule>& rules) {
	for (int guard = 0; guard < 64; ++guard) {
		bool changed = false;
		for (atom_id at : atoms_of(e)) {
			const atom_data& d = adat(at);
			if (d.kind != atom_kind::ufunc || d.args.size() != 1) continue;
			for (auto& rule : rules) {
				if (d.name != rule.fname || d.fmi[0] < rule.order) continue;
				expr rep = rule.rhs;
				for (int k = rule.order; k < d.fmi[0]; ++k) rep = Dt(rep);
				subst_map s;
				s[at] = rep;
				e = substitute(e, s);
				changed = true;
				break;
			}
			if (changed) break;
		}
		if (!changed) return e;
	}
	throw kernel_error("reduce_odes: rewriting did not settle");
}

// ------------------------------------------------------- exact linear algebra

inline std::optional<std::vector<rat>> solve_linear(std::vector<std::vector<rat>> A, std::vector<rat> b) {
	size_t rows = A.size();
	size_t cols = rows ? A[0].size() : 0;
	std::vector<size_t> pivot_col;
	size_t r = 0;
	for (size_t cx = 0; cx < cols && r < rows; ++cx) {
		size_t p = r;
		while (p < rows && A[p][cx] == 0) ++p;
		if (p == rows) continue;
		std::swap(A[p], A[r]);
		std::swap(b[p], b[r]);
		rat inv = rat(1) / A[r][cx];
		for (size_t j = cx; j < cols; ++j) A[r][j] *= inv;
		b[r] *= inv;
		for (size_t i = 0; i < rows; ++i) {
			if (i == r || A[i][cx] == 0) continue;
			rat f = A[i][cx];
			for (size_t j = cx; j < cols; ++j) A[i][j] -= f * A[r][j];
			b[i] -= f * b[r];
		}
		pivot_col.push_back(cx);
		++r;
	}
	for (size_t i = r; i < rows; ++i)
		if (b[i] != 0) return std::nullopt;
	std::vector<rat> x(cols, rat(0));
	for (size_t k = 0; k < pivot_col.size(); ++k) x[pivot_col[k]] = b[k];
	return x;
}

inline int rank_of(std::vector<std::vector<rat>> A) {
	size_t rows = A.size();
	size_t cols = rows ? A[0].size() : 0;
	size_t r = 0;
	for (size_t c = 0; c < cols && r < rows; ++c) {
		size_t p = r;
		while (p < rows && A[p][c] == 0) ++p;
		if (p == rows) continue;
		std::swap(A[p], A[r]);
		rat inv = rat(1) / A[r][c];
		for (size_t j = c; j < cols; ++j) A[r][j] *= inv;
		for (size_t i = r + 1; i < rows; ++i) {
			if (A[i][c] == 0) continue;
			rat f = A[i][c];
			for (size_t j = c; j < cols; ++j) A[i][j] -= f * A[r][j];
		}
		++r;
	}
	return int(r);
}

using slot_simplifier = std::function<expr(const expr&)>;

// rational coordinates of each field's slots against a shared monomial basis;
// slot denominators are cleared by the product of all denominators in the slot
inline std::vector<std::vector<std::pair<std::pair<size_t, mono>, rat>>> field_coordinates(
    const std::vector<std::vector<expr>>& slot_values, const slot_simplifier& simp) {
	size_t nf = slot_values.size();
	size_t ns = nf ? slot_values[0].size() : 0;
	std::vector<std::vector<expr>> vals(nf, std::vector<expr>());
	for (size_t i = 0; i < nf; ++i) {
		vals[i].reserve(ns);
		for (size_t s = 0; s < ns; ++s) vals[i].push_back(simp ? simp(slot_values[i][s]) : slot_values[i][s]);
	}
	std::vector<std::vector<std::pair<std::pair<size_t, mono>, rat>>> coords(nf);
	for (size_t s = 0; s < ns; ++s) {
		std::vector<expr> numerized(nf);
		for (size_t i = 0; i < nf; ++i) {
			expr v = expr{vals[i][s].num, p_const(1)};
			for (size_t j = 0; j < nf; ++j) {
				if (j == i) continue;
				v = emul(v, expr{vals[j][s].den, p_const(1)});
			}
			if (!(v.den.is_const() && v.den.const_val() == 1))
				throw kernel_error("field_coordinates: denominators did not clear");
			numerized[i] = v;
		}
		for (size_t i = 0; i < nf; ++i)
			for (auto& [m, c] : numerized[i].num.t) coords[i].push_back({{s, m}, c});
	}
	return coords;
}

inline std::optional<std::vector<rat>> span_solve(const std::vector<vfield>& basis, const vfield& target,
                                                  const slot_simplifier& simp = {}) {
	if (basis.empty()) return vf_is_zero(target) ? std::make_optional(std::vector<rat>{}) : std::nullopt;
	std::vector<std::vector<expr>> slot_values;
	for (auto& q : basis) slot_values.push_back(vf_slots(q));
	slot_values.push_back(vf_slots(target));
	auto coords = field_coordinates(slot_values, simp);
	std::map<std::pair<size_t, mono>, size_t, std::less<>> rowix;
	auto row_of = [&](const std::pair<size_t, mono>& k) {
		auto it = rowix.find(k);
		if (it != rowix.end()) return it->second;
		size_t id = rowix.size();
		rowix.emplace(k, id);
		return id;
	};
	size_t nb = basis.size();
	std::vector<std::vector<rat>> A;
	std::vector<rat> b;
	auto ensure_rows = [&](size_t n) {
		while (A.size() < n) {
			A.emplace_back(nb, rat(0));
			b.emplace_back(0);
		}
	};
	for (size_t i = 0; i <= nb; ++i)
		for (auto& [key, c] : coords[i]) {
			size_t rid = row_of(key);
			ensure_rows(rid + 1);
			if (i < nb)
				A[rid][i] = c;
			else
				b[rid] = c;
		}
	return solve_linear(std::move(A), std::move(b));
}

inline int dimension_of(const std::vector<vfield>& gens, const slot_simplifier& simp = {}) {
	if (gens.empty()) return 0;
	std::vector<std::vector<expr>> slot_values;
	for (auto& q : gens) slot_values.push_back(vf_slots(q));
	auto coords = field_coordinates(slot_values, simp);
	std::map<std::pair<size_t, mono>, size_t, std::less<>> rowix;
	for (auto& cs : coords)
		for (auto& [key, c] : cs)
			if (!rowix.count(key)) rowix.emplace(key, rowix.size());
	std::vector<std::vector<rat>> A(rowix.size(), std::vector<rat>(gens.size(), rat(0)));
	for (size_t i = 0; i < coords.size(); ++i)
		for (auto& [key, c] : coords[i]) A[rowix.at(key)][i] = c;
	return rank_of(std::move(A));
}

struct closure_info {
	bool closed = true;
	int fail_i = -1;
	int fail_j = -1;
	// structure constants for i < j; bracket(g_i, g_j) = sum_k c[i][j][k] g_k
	std::vector<std::vector<std::vector<rat>>> c;
};

inline closure_info closure_check(const std::vector<vfield>& gens, const slot_simplifier& simp = {}) {
	closure_info info;
	size_t n = gens.size();
	info.c.assign(n, std::vector<std::vector<rat>>(n));
	for (size_t i = 0; i < n; ++i)
		for (size_t j = i + 1; j < n; ++j) {
			vfield br = bracket(gens[i], gens[j]);
			auto sol = span_solve(gens, br, simp);
			if (!sol) {
				info.closed = false;
				info.fail_i = int(i);
				info.fail_j = int(j);
				return info;
			}
			info.c[i][j] = *sol;
		}
	return info;
}

}  // namespace nlsym
