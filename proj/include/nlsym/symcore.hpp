#pragma once

// Exact symbolic kernel: interned atoms, sparse multivariate polynomials over
// the rationals, and always-canonical fractions of those polynomials.
//
// Decidability contract for is_zero: atoms are treated as algebraically
// independent except for the relations folded at construction time
//   i^2 = -1, sign-symbol^2 = 1, exp(a)exp(b) = exp(a+b), exp(q ln u) = u^q,
//   pow(u,a)pow(u,b) = pow(u,a+b) with integer parts folded out,
//   ln(c u) = ln c + ln u for rational c > 0 (prime-split),
//   pow and ln distributed over known-positive factors.
// Combinations whose zero-test would depend on anything outside this table
// (e.g. two ln atoms with power-related arguments) raise kernel_error.

#include "numeric.hpp"

#include <algorithm>
#include <array>
#include <deque>
#include <map>
#include <set>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

namespace nlsym {

struct kernel_error : std::runtime_error {
	explicit kernel_error(const std::string& w) : std::runtime_error(w) {}
};

using atom_id = int;

// monomial: (atom, exponent) pairs sorted by atom id; exponents nonzero,
// transiently negative inside arithmetic, strictly positive once stored
using mono = std::vector<std::pair<atom_id, int>>;

// lex order deciding on the highest atom id first; compatible with products
struct mono_cmp {
	bool operator()(const mono& a, const mono& b) const {
		auto ia = a.rbegin();
		auto ib = b.rbegin();
		while (ia != a.rend() || ib != b.rend()) {
			int va = ia != a.rend() ? ia->first : -1;
			int vb = ib != b.rend() ? ib->first : -1;
			if (va == vb) {
				if (ia->second != ib->second) return ia->second < ib->second;
				++ia;
				++ib;
			} else if (va > vb) {
				if (ia->second != 0) return ia->second < 0;
				++ia;
			} else {
				if (ib->second != 0) return ib->second > 0;
				++ib;
			}
		}
		return false;
	}
};

inline mono mono_mul(const mono& a, const mono& b) {
	mono r;
	r.reserve(a.size() + b.size());
	auto ia = a.begin();
	auto ib = b.begin();
	while (ia != a.end() && ib != b.end()) {
		if (ia->first == ib->first) {
			int e = ia->second + ib->second;
			if (e != 0) r.emplace_back(ia->first, e);
			++ia;
			++ib;
		} else if (ia->first < ib->first) {
			r.push_back(*ia++);
		} else {
			r.push_back(*ib++);
		}
	}
	r.insert(r.end(), ia, a.end());
	r.insert(r.end(), ib, b.end());
	return r;
}

inline bool mono_divides(const mono& d, const mono& a) {
	auto ia = a.begin();
	for (auto& [v, e] : d) {
		while (ia != a.end() && ia->first < v) ++ia;
		if (ia == a.end() || ia->first != v || ia->second < e) return false;
	}
	return true;
}

inline mono mono_div(const mono& a, const mono& d) {
	mono inv = d;
	for (auto& p : inv) p.second = -p.second;
	return mono_mul(a, inv);
}

struct poly {
	std::map<mono, rat, mono_cmp> t;
	bool zero() const { return t.empty(); }
	bool is_const() const { return t.empty() || (t.size() == 1 && t.begin()->first.empty()); }
	rat const_val() const { return t.empty() ? rat(0) : t.begin()->second; }
};

inline poly p_zero() { return poly{}; }

inline poly p_const(const rat& c) {
	poly p;
	if (c != 0) p.t[mono{}] = c;
	return p;
}

inline void p_add_term(poly& p, const mono& m, const rat& c) {
	if (c == 0) return;
	auto it = p.t.find(m);
	if (it == p.t.end()) {
		p.t.emplace(m, c);
	} else {
		it->second += c;
		if (it->second == 0) p.t.erase(it);
	}
}

inline poly p_add(const poly& a, const poly& b) {
	poly r = a;
	for (auto& [m, c] : b.t) p_add_term(r, m, c);
	return r;
}

inline poly p_neg(const poly& a) {
	poly r = a;
	for (auto& [m, c] : r.t) const_cast<rat&>(c) = -c;
	return r;
}

inline poly p_sub(const poly& a, const poly& b) { return p_add(a, p_neg(b)); }

inline poly p_scale(const poly& a, const rat& s) {
	poly r;
	if (s == 0) return r;
	for (auto& [m, c] : a.t) r.t[m] = c * s;
	return r;
}

// free-ring product: no atom relations applied (used by gcd machinery)
inline poly p_mul_free(const poly& a, const poly& b) {
	poly r;
	for (auto& [ma, ca] : a.t)
		for (auto& [mb, cb] : b.t) p_add_term(r, mono_mul(ma, mb), ca * cb);
	return r;
}

inline int rat_cmp3(const rat& a, const rat& b) { return cmp(a, b); }

inline int mono_cmp3(const mono& a, const mono& b) {
	mono_cmp lt;
	if (lt(a, b)) return -1;
	if (lt(b, a)) return 1;
	return 0;
}

inline int poly_cmp3(const poly& a, const poly& b) {
	auto ia = a.t.begin();
	auto ib = b.t.begin();
	while (ia != a.t.end() && ib != b.t.end()) {
		if (int c = mono_cmp3(ia->first, ib->first)) return c;
		if (int c = rat_cmp3(ia->second, ib->second)) return c;
		++ia;
		++ib;
	}
	if (ia != a.t.end()) return 1;
	if (ib != b.t.end()) return -1;
	return 0;
}

struct expr {
	poly num;
	poly den;  // canonical: integer-primitive, positive leading coefficient
};

inline int expr_cmp3(const expr& a, const expr& b) {
	if (int c = poly_cmp3(a.num, b.num)) return c;
	return poly_cmp3(a.den, b.den);
}

inline bool expr_same(const expr& a, const expr& b) { return expr_cmp3(a, b) == 0; }

// ---------------------------------------------------------------- atoms

enum class atom_kind {
	sym,        // named real symbol
	csym,       // named complex symbol, conj_half selects the pair member
	sign_sym,   // named symbol squaring to 1
	imag_unit,  // i
	jet,        // dependent variable psi^comp (starred if conj_half), derivative multiindex jmi over (t,x1,x2)
	rho_mod,    // |psi| of the scalar component
	polar_ang,  // polar angle of (x1,x2)
	exp_fn,
	ln_fn,
	pow_fn,   // args = {base, exponent}
	ufunc,    // named unknown function, fmi = slot derivative multiindex, args = slot values
	antider,  // t-antiderivative of args[0]
};

struct atom_data {
	atom_kind kind{};
	std::string name;
	bool conj_half = false;
	bool positive = false;
	bool real_val = true;
	int comp = 0;
	std::array<int, 3> jmi{{0, 0, 0}};
	std::vector<int> fmi;
	std::vector<expr> args;
};

inline int atom_data_cmp3(const atom_data& a, const atom_data& b) {
	if (a.kind != b.kind) return a.kind < b.kind ? -1 : 1;
	if (int c = a.name.compare(b.name)) return c < 0 ? -1 : 1;
	if (a.conj_half != b.conj_half) return a.conj_half < b.conj_half ? -1 : 1;
	if (a.comp != b.comp) return a.comp < b.comp ? -1 : 1;
	if (a.jmi != b.jmi) return a.jmi < b.jmi ? -1 : 1;
	if (a.fmi != b.fmi) return a.fmi < b.fmi ? -1 : 1;
	if (a.args.size() != b.args.size()) return a.args.size() < b.args.size() ? -1 : 1;
	for (size_t i = 0; i < a.args.size(); ++i)
		if (int c = expr_cmp3(a.args[i], b.args[i])) return c;
	return 0;
}

struct atom_data_less {
	bool operator()(const atom_data& a, const atom_data& b) const { return atom_data_cmp3(a, b) < 0; }
};

// deque: interning new atoms must not invalidate references held across calls
inline std::deque<atom_data>& atom_table() {
	static std::deque<atom_data> v;
	return v;
}

inline std::map<atom_data, atom_id, atom_data_less>& atom_index() {
	static std::map<atom_data, atom_id, atom_data_less> m;
	return m;
}

inline atom_id intern_atom(const atom_data& d) {
	auto& idx = atom_index();
	auto it = idx.find(d);
	if (it != idx.end()) return it->second;
	atom_id id = int(atom_table().size());
	atom_table().push_back(d);
	idx.emplace(d, id);
	return id;
}

inline const atom_data& adat(atom_id a) { return atom_table()[size_t(a)]; }

inline expr e_zero() {
	expr e;
	e.den = p_const(1);
	return e;
}

inline expr e_rat(const rat& c) {
	expr e;
	e.num = p_const(c);
	e.den = p_const(1);
	return e;
}

inline expr e_int(long n) { return e_rat(rat(n)); }

inline expr e_atom(atom_id a, int k = 1) {
	expr e;
	mono m{{a, k}};
	e.num.t[m] = 1;
	e.den = p_const(1);
	return e;
}

inline bool e_is_rat(const expr& e) { return e.num.is_const() && e.den.is_const(); }

inline rat e_rat_val(const expr& e) { return e.num.const_val() / e.den.const_val(); }

inline atom_id a_sym(const std::string& name, bool positive = false) {
	atom_data d;
	d.kind = atom_kind::sym;
	d.name = name;
	d.positive = positive;
	return intern_atom(d);
}

inline atom_id a_possym(const std::string& name) { return a_sym(name, true); }

inline atom_id a_csym(const std::string& name, bool half = false) {
	atom_data d;
	d.kind = atom_kind::csym;
	d.name = name;
	d.conj_half = half;
	d.real_val = false;
	return intern_atom(d);
}

inline atom_id a_sign(const std::string& name) {
	atom_data d;
	d.kind = atom_kind::sign_sym;
	d.name = name;
	return intern_atom(d);
}

inline atom_id a_imag() {
	atom_data d;
	d.kind = atom_kind::imag_unit;
	d.real_val = false;
	return intern_atom(d);
}

inline atom_id a_jet(int comp, bool star, int dt, int d1, int d2) {
	atom_data d;
	d.kind = atom_kind::jet;
	d.conj_half = star;
	d.real_val = false;
	d.comp = comp;
	d.jmi = {dt, d1, d2};
	return intern_atom(d);
}

inline atom_id a_rho() {
	atom_data d;
	d.kind = atom_kind::rho_mod;
	d.positive = true;
	return intern_atom(d);
}

inline atom_id a_ang() {
	atom_data d;
	d.kind = atom_kind::polar_ang;
	return intern_atom(d);
}

// coordinates get the first three atom ids; call early and everywhere
inline atom_id coord_atom(int dir) {
	static atom_id ids[3] = {a_sym("t"), a_sym("x1"), a_sym("x2")};
	return ids[dir];
}

struct ufunc_info {
	bool real = true;
};

inline std::map<std::string, ufunc_info>& ufunc_registry() {
	static std::map<std::string, ufunc_info> m;
	return m;
}

inline void declare_ufunc(const std::string& name, bool real) {
	auto& reg = ufunc_registry();
	auto it = reg.find(name);
	if (it == reg.end())
		reg[name] = ufunc_info{real};
	else if (it->second.real != real)
		throw kernel_error("ufunc '" + name + "' redeclared with different reality");
}

inline bool expr_real_structural(const expr& e);

inline atom_id a_ufunc(const std::string& name, const std::vector<int>& fmi, const std::vector<expr>& args,
                       bool half = false) {
	auto& reg = ufunc_registry();
	if (!reg.count(name)) reg[name] = ufunc_info{true};
	bool freal = reg[name].real;
	if (freal && half) throw kernel_error("conjugate half of real ufunc '" + name + "'");
	atom_data d;
	d.kind = atom_kind::ufunc;
	d.name = name;
	d.conj_half = half;
	d.fmi = fmi;
	d.fmi.resize(args.size(), 0);  // one derivative count per slot, so equal atoms intern equal
	d.args = args;
	bool args_real = true;
	for (auto& a : args) args_real = args_real && expr_real_structural(a);
	d.real_val = freal && args_real;
	return intern_atom(d);
}

inline atom_id a_antider(const expr& integrand) {
	atom_data d;
	d.kind = atom_kind::antider;
	d.args = {integrand};
	d.real_val = expr_real_structural(integrand);
	return intern_atom(d);
}

inline bool atom_real(atom_id a) {
	const atom_data& d = adat(a);
	switch (d.kind) {
		case atom_kind::sym:
		case atom_kind::sign_sym:
		case atom_kind::rho_mod:
		case atom_kind::polar_ang:
			return true;
		case atom_kind::csym:
		case atom_kind::imag_unit:
		case atom_kind::jet:
			return false;
		default:
			return d.real_val;
	}
}

inline bool expr_real_structural(const expr& e) {
	for (const poly* p : {&e.num, &e.den})
		for (auto& [m, c] : p->t)
			for (auto& [a, k] : m)
				if (!atom_real(a)) return false;
	return true;
}

inline bool atom_positive(atom_id a) { return adat(a).positive; }

// ------------------------------------------------- folding multiplication

expr make_exp(const expr& u);
expr make_ln(const expr& u);
expr make_pow(const expr& base, const expr& expo);
expr eadd(const expr& a, const expr& b);
expr esub(const expr& a, const expr& b);
expr emul(const expr& a, const expr& b);
expr ediv(const expr& a, const expr& b);
expr eneg(const expr& a);
expr epow(const expr& a, long k);
expr make_frac(poly n, poly d);
expr pow_prime(long p, const expr& expo);
expr pow_single_atom(atom_id a, const expr& expo);
expr make_ln_atom_shortcut(atom_id a);

inline expr e_from_poly(poly p) { return make_frac(std::move(p), p_const(1)); }

struct pend_term {
	mono m;
	rat c;
	std::vector<std::pair<expr, long>> fac;  // multi-term bases raised to folded integer powers
};

inline atom_id intern_exp(const expr& arg) {
	atom_data d;
	d.kind = atom_kind::exp_fn;
	d.args = {arg};
	d.real_val = expr_real_structural(arg);
	d.positive = d.real_val;
	return intern_atom(d);
}

inline atom_id intern_pow(const expr& base, const expr& expo) {
	atom_data d;
	d.kind = atom_kind::pow_fn;
	d.args = {base, expo};
	d.real_val = expr_real_structural(base) && expr_real_structural(expo);
	d.positive = d.real_val;
	return intern_atom(d);
}

inline rat rat_floor(const rat& q) {
	mpz_class f;
	mpz_fdiv_q(f.get_mpz_t(), q.get_num().get_mpz_t(), q.get_den().get_mpz_t());
	return rat(f);
}

// apply the atom relations to a single monomial; extra whole-expression
// factors that cannot stay inside a monomial are pushed onto fac
inline void normalize_mono(mono& m, rat& c, std::vector<std::pair<expr, long>>& fac) {
	bool special = false;
	for (auto& [a, e] : m) {
		atom_kind k = adat(a).kind;
		if (k == atom_kind::imag_unit || k == atom_kind::sign_sym || k == atom_kind::exp_fn ||
		    k == atom_kind::pow_fn || (k == atom_kind::rho_mod && (e > 1 || e < 0))) {
			special = true;
			break;
		}
	}
	if (!special) return;

	std::map<atom_id, long> em;
	for (auto& [a, e] : m) em[a] += e;
	m.clear();

	// |psi|^2 = psi psi*, so keep at most one modulus factor
	for (auto& [a, e] : em) {
		if (adat(a).kind != atom_kind::rho_mod || (e >= 0 && e <= 1)) continue;
		long r = ((e % 2) + 2) % 2;
		long q = (e - r) / 2;
		e = r;
		em[a_jet(0, false, 0, 0, 0)] += q;
		em[a_jet(0, true, 0, 0, 0)] += q;
		break;
	}

	expr exp_arg = e_zero();
	bool have_exp = false;
	std::vector<std::pair<atom_id, long>> pows;

	for (auto& [a, e] : em) {
		if (e == 0) continue;
		const atom_data& d = adat(a);
		switch (d.kind) {
			case atom_kind::imag_unit: {
				long r = ((e % 4) + 4) % 4;
				if (r >= 2) c = -c;
				if (r % 2) m.emplace_back(a, 1);
				break;
			}
			case atom_kind::sign_sym: {
				long r = ((e % 2) + 2) % 2;
				if (r) m.emplace_back(a, 1);
				break;
			}
			case atom_kind::exp_fn: {
				exp_arg = eadd(exp_arg, emul(e_int(e), d.args[0]));
				have_exp = true;
				break;
			}
			case atom_kind::pow_fn:
				pows.emplace_back(a, e);
				break;
			default:
				m.emplace_back(a, int(e));
		}
	}

	// group pow atoms by base; fold base-atom exponents of the monomial in
	std::vector<char> used(pows.size(), 0);
	for (size_t i = 0; i < pows.size(); ++i) {
		if (used[i]) continue;
		const expr& base = adat(pows[i].first).args[0];
		expr tot = emul(e_int(pows[i].second), adat(pows[i].first).args[1]);
		for (size_t j = i + 1; j < pows.size(); ++j) {
			if (used[j]) continue;
			if (expr_same(base, adat(pows[j].first).args[0])) {
				used[j] = 1;
				tot = eadd(tot, emul(e_int(pows[j].second), adat(pows[j].first).args[1]));
			}
		}
		atom_id base_atom = -1;
		if (base.den.is_const() && base.num.t.size() == 1) {
			auto& [bm, bc] = *base.num.t.begin();
			if (bc == 1 && base.den.const_val() == 1 && bm.size() == 1 && bm[0].second == 1)
				base_atom = bm[0].first;
		}
		if (base_atom >= 0) {
			long own = 0;
			for (auto it = m.begin(); it != m.end(); ++it)
				if (it->first == base_atom) {
					own = it->second;
					m.erase(it);
					break;
				}
			tot = eadd(tot, e_int(own));
			if (e_is_rat(tot)) {
				rat q = e_rat_val(tot);
				rat ip = rat_floor(q);
				rat fr = q - ip;
				if (ip != 0) m.emplace_back(base_atom, int(to_long(ip)));
				if (fr != 0) m.emplace_back(intern_pow(base, e_rat(fr)), 1);
			} else if (!(tot.num.zero())) {
				m.emplace_back(intern_pow(base, tot), 1);
			}
		} else {
			if (e_is_rat(tot)) {
				rat q = e_rat_val(tot);
				rat ip = rat_floor(q);
				rat fr = q - ip;
				if (ip != 0) fac.emplace_back(base, to_long(ip));
				if (fr != 0) m.emplace_back(intern_pow(base, e_rat(fr)), 1);
			} else if (!tot.num.zero()) {
				m.emplace_back(intern_pow(base, tot), 1);
			}
		}
	}

	// the kernel's pow is the positive branch, so equal fractional exponents of
	// real bases combine across different bases: u^q v^q = (uv)^q
	for (size_t i = 0; i < m.size(); ++i) {
		const atom_data& di = adat(m[i].first);
		if (di.kind != atom_kind::pow_fn || !di.real_val || e_is_rat(di.args[0])) continue;
		for (size_t j = i + 1; j < m.size(); ++j) {
			const atom_data& dj = adat(m[j].first);
			if (dj.kind != atom_kind::pow_fn || !dj.real_val || e_is_rat(dj.args[0])) continue;
			if (!expr_same(di.args[1], dj.args[1])) continue;
			fac.emplace_back(make_pow(emul(di.args[0], dj.args[0]), di.args[1]), 1);
			m.erase(m.begin() + long(j));
			m.erase(m.begin() + long(i));
			i = size_t(-1);
			break;
		}
		if (i == size_t(-1)) continue;
	}

	if (have_exp && !exp_arg.num.zero()) m.emplace_back(intern_exp(exp_arg), 1);
	std::sort(m.begin(), m.end());
}

inline poly p_mul_fold(const poly& a, const poly& b, std::vector<pend_term>& pend) {
	poly r;
	for (auto& [ma, ca] : a.t)
		for (auto& [mb, cb] : b.t) {
			mono m = mono_mul(ma, mb);
			rat c = ca * cb;
			std::vector<std::pair<expr, long>> fac;
			normalize_mono(m, c, fac);
			if (fac.empty())
				p_add_term(r, m, c);
			else
				pend.push_back(pend_term{std::move(m), std::move(c), std::move(fac)});
		}
	return r;
}

// ------------------------------------------------------------ gcd machinery
// operates in the free ring (p_mul_free); see reduction notes above

inline int p_main_atom(const poly& p) {
	int v = -1;
	for (auto& [m, c] : p.t)
		if (!m.empty()) v = std::max(v, m.back().first);
	return v;
}

inline int p_deg_in(const poly& p, int v) {
	int d = 0;
	for (auto& [m, c] : p.t)
		for (auto& [a, e] : m)
			if (a == v) d = std::max(d, e);
	return d;
}

inline std::map<int, poly> p_uni(const poly& p, int v) {
	std::map<int, poly> u;
	for (auto& [m, c] : p.t) {
		int d = 0;
		mono rest;
		for (auto& [a, e] : m) {
			if (a == v)
				d = e;
			else
				rest.emplace_back(a, e);
		}
		p_add_term(u[d], rest, c);
	}
	for (auto it = u.begin(); it != u.end();)
		it = it->second.zero() ? u.erase(it) : std::next(it);
	return u;
}

inline poly p_from_uni(const std::map<int, poly>& u, int v) {
	poly p;
	for (auto& [d, q] : u)
		for (auto& [m, c] : q.t) {
			mono mm = m;
			if (d != 0) {
				mm.emplace_back(v, d);
				std::sort(mm.begin(), mm.end());
			}
			p_add_term(p, mm, c);
		}
	return p;
}

inline poly p_exact_div_free(const poly& a, const poly& b) {
	if (b.zero()) throw kernel_error("division by zero polynomial");
	if (b.is_const()) return p_scale(a, rat(1) / b.const_val());
	poly r = a;
	poly q;
	auto bl = std::prev(b.t.end());
	while (!r.zero()) {
		auto rl = std::prev(r.t.end());
		if (!mono_divides(bl->first, rl->first)) throw kernel_error("inexact polynomial division");
		mono qm = mono_div(rl->first, bl->first);
		rat qc = rl->second / bl->second;
		poly term;
		term.t[qm] = qc;
		q = p_add(q, term);
		r = p_sub(r, p_mul_free(term, b));
	}
	return q;
}

poly p_gcd_free(const poly& a, const poly& b);

inline poly p_content_in(const poly& p, int v) {
	auto u = p_uni(p, v);
	poly g;
	for (auto& [d, q] : u) g = p_gcd_free(g, q);
	return g;
}

// pseudo-remainder of a by b in variable v, subresultant scaling
inline poly p_prem(const poly& a, const poly& b, int v) {
	auto ua = p_uni(a, v);
	auto ub = p_uni(b, v);
	int da = ua.empty() ? -1 : ua.rbegin()->first;
	int db = ub.empty() ? -1 : ub.rbegin()->first;
	if (db < 0) throw kernel_error("pseudo-division by zero");
	const poly& lb = ub.rbegin()->second;
	long steps = da - db + 1;
	std::map<int, poly> r = ua;
	long done = 0;
	while (!r.empty() && r.rbegin()->first >= db) {
		int dr = r.rbegin()->first;
		poly lr = r.rbegin()->second;
		std::map<int, poly> rn;
		for (auto& [d, q] : r) {
			if (d == dr) continue;
			rn[d] = p_mul_free(q, lb);
		}
		for (auto& [d, q] : ub) {
			if (d == db) continue;
			int nd = d + dr - db;
			poly sub = p_mul_free(q, lr);
			auto it = rn.find(nd);
			if (it == rn.end())
				rn[nd] = p_neg(sub);
			else {
				it->second = p_sub(it->second, sub);
				if (it->second.zero()) rn.erase(it);
			}
		}
		for (auto it = rn.begin(); it != rn.end();)
			it = it->second.zero() ? rn.erase(it) : std::next(it);
		r = std::move(rn);
		++done;
	}
	poly rp = p_from_uni(r, v);
	for (long k = done; k < steps; ++k) rp = p_mul_free(rp, lb);
	return rp;
}

inline poly p_gcd_free(const poly& a, const poly& b) {
	if (a.zero()) return b;
	if (b.zero()) return a;
	if (a.is_const() || b.is_const()) return p_const(1);
	int v = std::max(p_main_atom(a), p_main_atom(b));
	int da = p_deg_in(a, v);
	int db = p_deg_in(b, v);
	if (da == 0) return p_gcd_free(a, p_content_in(b, v));
	if (db == 0) return p_gcd_free(p_content_in(a, v), b);
	poly ca = p_content_in(a, v);
	poly cb = p_content_in(b, v);
	poly c = p_gcd_free(ca, cb);
	poly A = p_exact_div_free(a, ca);
	poly B = p_exact_div_free(b, cb);
	if (da < db) std::swap(A, B);
	poly g = p_const(1);
	poly h = p_const(1);
	while (true) {
		int dA = p_deg_in(A, v);
		int dB = p_deg_in(B, v);
		int d = dA - dB;
		poly r = p_prem(A, B, v);
		if (r.zero()) break;
		if (p_deg_in(r, v) == 0) {
			B = p_const(1);
			break;
		}
		poly divisor = g;
		for (int k = 0; k < d; ++k) divisor = p_mul_free(divisor, h);
		A = B;
		B = p_exact_div_free(r, divisor);
		g = p_uni(A, v).rbegin()->second;
		if (d == 0) {
			// h unchanged
		} else if (d == 1) {
			h = g;
		} else {
			poly gn = g;
			for (int k = 1; k < d; ++k) gn = p_mul_free(gn, g);
			poly hd = h;
			for (int k = 1; k < d - 1; ++k) hd = p_mul_free(hd, h);
			h = p_exact_div_free(gn, hd);
		}
	}
	if (B.is_const()) return c;
	poly cB = p_content_in(B, v);
	return p_mul_free(c, p_exact_div_free(B, cB));
}

// rational content carrying the sign of the leading coefficient
inline rat p_content(const poly& p) {
	if (p.zero()) return rat(1);
	mpz_class g = 0;
	mpz_class l = 1;
	for (auto& [m, c] : p.t) {
		mpz_gcd(g.get_mpz_t(), g.get_mpz_t(), c.get_num().get_mpz_t());
		mpz_lcm(l.get_mpz_t(), l.get_mpz_t(), c.get_den().get_mpz_t());
	}
	rat c(g, l);
	c.canonicalize();
	if (p.t.rbegin()->second < 0) c = -c;
	return c;
}

inline atom_id conj_atom(atom_id a);

inline poly conj_poly(const poly& p) {
	poly r;
	for (auto& [m, c] : p.t) {
		mono mm;
		rat cc = c;
		for (auto& [a, e] : m) {
			if (adat(a).kind == atom_kind::imag_unit) {
				if (e % 2) cc = -cc;
				mm.emplace_back(a, e);
			} else {
				mm.emplace_back(conj_atom(a), e);
			}
		}
		std::sort(mm.begin(), mm.end());
		p_add_term(r, mm, cc);
	}
	return r;
}

inline bool p_has_kind(const poly& p, atom_kind k) {
	for (auto& [m, c] : p.t)
		for (auto& [a, e] : m)
			if (adat(a).kind == k) return true;
	return false;
}

// split by parity of the i exponent: p = even + i*odd with both parts i-free
inline void p_split_i(const poly& p, poly& even, poly& odd) {
	for (auto& [m, c] : p.t) {
		mono mm;
		int ie = 0;
		for (auto& [a, e] : m) {
			if (adat(a).kind == atom_kind::imag_unit)
				ie = e;
			else
				mm.emplace_back(a, e);
		}
		p_add_term(ie ? odd : even, mm, c);
	}
}

inline expr resolve_pend(poly base, std::vector<pend_term> pend) {
	expr r = make_frac(std::move(base), p_const(1));
	for (auto& pt : pend) {
		poly mp;
		p_add_term(mp, pt.m, pt.c);
		expr term = make_frac(std::move(mp), p_const(1));
		for (auto& [b, n] : pt.fac) term = emul(term, epow(b, n));
		r = eadd(r, term);
	}
	return r;
}

inline expr p_mul_expr(const poly& a, const poly& b) {
	std::vector<pend_term> pend;
	poly r = p_mul_fold(a, b, pend);
	if (pend.empty()) return expr{std::move(r), p_const(1)};
	return resolve_pend(std::move(r), std::move(pend));
}

inline expr make_frac(poly n, poly d) {
	for (int pass = 0; pass < 10; ++pass) {
		if (d.zero()) throw kernel_error("division by zero");
		if (n.zero()) return expr{p_zero(), p_const(1)};
		// clear transient negative exponents left by power folding
		{
			std::map<atom_id, int> need;
			for (const poly* p : {&n, &d})
				for (auto& [m, c] : p->t)
					for (auto& [a, e] : m)
						if (e < 0) need[a] = std::max(need[a], -e);
			if (!need.empty()) {
				poly s;
				mono sm;
				for (auto& [a, e] : need) sm.emplace_back(a, e);
				s.t[sm] = 1;
				std::vector<pend_term> pend;
				n = p_mul_fold(n, s, pend);
				d = p_mul_fold(d, s, pend);
				if (!pend.empty()) throw kernel_error("pending factors while clearing exponents");
				continue;
			}
		}
		if (d.is_const()) {
			expr e;
			e.num = p_scale(n, rat(1) / d.const_val());
			e.den = p_const(1);
			return e;
		}
		poly g = p_gcd_free(n, d);
		if (!g.is_const()) {
			n = p_exact_div_free(n, g);
			d = p_exact_div_free(d, g);
			if (d.is_const()) continue;
		}
		if (p_has_kind(d, atom_kind::imag_unit)) {
			// d = P + iQ with i-free P, Q; (P + iQ)(P - iQ) = P^2 + Q^2 is i-free
			poly P, Q;
			p_split_i(d, P, Q);
			poly iq;
			{
				mono im{{a_imag(), 1}};
				poly ip;
				ip.t[im] = 1;
				std::vector<pend_term> pend;
				iq = p_mul_fold(Q, ip, pend);
				if (!pend.empty()) throw kernel_error("pending factors while rationalizing");
			}
			poly dc = p_sub(P, iq);
			expr nn = p_mul_expr(n, dc);
			expr dd = p_mul_expr(d, dc);
			if (nn.den.is_const() && dd.den.is_const() && nn.den.const_val() == 1 && dd.den.const_val() == 1) {
				n = std::move(nn.num);
				d = std::move(dd.num);
				continue;
			}
			return ediv(nn, dd);
		}
		// clear sign symbols common to every denominator monomial
		{
			std::set<atom_id> common;
			bool first = true;
			for (auto& [m, c] : d.t) {
				std::set<atom_id> here;
				for (auto& [a, e] : m)
					if (adat(a).kind == atom_kind::sign_sym) here.insert(a);
				if (first) {
					common = here;
					first = false;
				} else {
					std::set<atom_id> keep;
					std::set_intersection(common.begin(), common.end(), here.begin(), here.end(),
					                      std::inserter(keep, keep.begin()));
					common = keep;
				}
				if (common.empty()) break;
			}
			if (!common.empty()) {
				poly s;
				mono m;
				for (atom_id a : common) m.emplace_back(a, 1);
				std::sort(m.begin(), m.end());
				s.t[m] = 1;
				expr nn = p_mul_expr(n, s);
				expr dd = p_mul_expr(d, s);
				if (!nn.den.is_const() || !dd.den.is_const()) return ediv(nn, dd);
				n = std::move(nn.num);
				d = std::move(dd.num);
				continue;
			}
		}
		// ensure at least one denominator monomial is exp-free
		{
			bool all_exp = true;
			const expr* first_arg = nullptr;
			for (auto& [m, c] : d.t) {
				bool has = false;
				for (auto& [a, e] : m)
					if (adat(a).kind == atom_kind::exp_fn) {
						has = true;
						if (!first_arg) first_arg = &adat(a).args[0];
					}
				if (!has) {
					all_exp = false;
					break;
				}
			}
			if (all_exp && first_arg) {
				poly s;
				mono m{{intern_exp(eneg(*first_arg)), 1}};
				s.t[m] = 1;
				expr nn = p_mul_expr(n, s);
				expr dd = p_mul_expr(d, s);
				if (!nn.den.is_const() || !dd.den.is_const()) return ediv(nn, dd);
				n = std::move(nn.num);
				d = std::move(dd.num);
				continue;
			}
		}
		rat c = p_content(d);
		expr e;
		e.num = p_scale(n, rat(1) / c);
		e.den = p_scale(d, rat(1) / c);
		return e;
	}
	throw kernel_error("denominator normalization did not settle");
}

inline expr eadd(const expr& a, const expr& b) {
	if (a.num.zero()) return b;
	if (b.num.zero()) return a;
	if (a.den.is_const() && b.den.is_const() && a.den.const_val() == 1 && b.den.const_val() == 1)
		return make_frac(p_add(a.num, b.num), p_const(1));
	expr n1 = p_mul_expr(a.num, b.den);
	expr n2 = p_mul_expr(b.num, a.den);
	expr d = p_mul_expr(a.den, b.den);
	if (n1.den.is_const() && n2.den.is_const() && d.den.is_const() && n1.den.const_val() == 1 &&
	    n2.den.const_val() == 1 && d.den.const_val() == 1)
		return make_frac(p_add(n1.num, n2.num), d.num);
	return ediv(eadd(n1, n2), d);
}

inline expr eneg(const expr& a) {
	expr r = a;
	r.num = p_neg(r.num);
	return r;
}

inline expr esub(const expr& a, const expr& b) { return eadd(a, eneg(b)); }

inline expr emul(const expr& a, const expr& b) {
	if (a.num.zero() || b.num.zero()) return e_zero();
	expr n = p_mul_expr(a.num, b.num);
	expr d = p_mul_expr(a.den, b.den);
	if (n.den.is_const() && d.den.is_const() && n.den.const_val() == 1 && d.den.const_val() == 1)
		return make_frac(std::move(n.num), std::move(d.num));
	return ediv(n, d);
}

inline expr ediv(const expr& a, const expr& b) {
	if (b.num.zero()) throw kernel_error("division by zero");
	expr binv = make_frac(b.den, b.num);
	return emul(a, binv);
}

inline expr epow(const expr& a, long k) {
	if (k == 0) return e_rat(1);
	expr base = k < 0 ? ediv(e_rat(1), a) : a;
	long n = k < 0 ? -k : k;
	expr r = e_rat(1);
	while (n > 0) {
		if (n & 1) r = emul(r, base);
		base = n > 1 ? emul(base, base) : base;
		n >>= 1;
	}
	return r;
}

inline expr operator+(const expr& a, const expr& b) { return eadd(a, b); }
inline expr operator-(const expr& a, const expr& b) { return esub(a, b); }
inline expr operator*(const expr& a, const expr& b) { return emul(a, b); }
inline expr operator/(const expr& a, const expr& b) { return ediv(a, b); }
inline expr operator-(const expr& a) { return eneg(a); }

// ----------------------------------------------------------- conjugation

inline atom_id conj_atom(atom_id a) {
	const atom_data& d = adat(a);
	switch (d.kind) {
		case atom_kind::sym:
		case atom_kind::sign_sym:
		case atom_kind::rho_mod:
		case atom_kind::polar_ang:
			return a;
		case atom_kind::imag_unit:
			throw kernel_error("conj of bare i handled at monomial level");
		case atom_kind::csym:
			return a_csym(d.name, !d.conj_half);
		case atom_kind::jet:
			return a_jet(d.comp, !d.conj_half, d.jmi[0], d.jmi[1], d.jmi[2]);
		case atom_kind::exp_fn: {
			if (d.real_val) return a;
			expr carg;
			{
				expr arg = d.args[0];
				carg = make_frac(conj_poly(arg.num), conj_poly(arg.den));
			}
			return intern_exp(carg);
		}
		case atom_kind::ln_fn: {
			if (d.real_val) return a;
			atom_data nd = d;
			nd.args[0] = make_frac(conj_poly(d.args[0].num), conj_poly(d.args[0].den));
			nd.real_val = expr_real_structural(nd.args[0]);
			return intern_atom(nd);
		}
		case atom_kind::pow_fn: {
			if (d.real_val) return a;
			expr cb = make_frac(conj_poly(d.args[0].num), conj_poly(d.args[0].den));
			expr ce = make_frac(conj_poly(d.args[1].num), conj_poly(d.args[1].den));
			return intern_pow(cb, ce);
		}
		case atom_kind::ufunc: {
			bool freal = ufunc_registry()[d.name].real;
			std::vector<expr> cargs;
			cargs.reserve(d.args.size());
			for (auto& x : d.args) cargs.push_back(make_frac(conj_poly(x.num), conj_poly(x.den)));
			return a_ufunc(d.name, d.fmi, cargs, freal ? d.conj_half : !d.conj_half);
		}
		case atom_kind::antider: {
			if (d.real_val) return a;
			return a_antider(make_frac(conj_poly(d.args[0].num), conj_poly(d.args[0].den)));
		}
	}
	throw kernel_error("conj_atom: unhandled kind");
}

inline expr conj(const expr& e) { return make_frac(conj_poly(e.num), conj_poly(e.den)); }

inline expr e_i() { return e_atom(a_imag()); }

inline expr re_part(const expr& e) { return ediv(eadd(e, conj(e)), e_int(2)); }

inline expr im_part(const expr& e) { return ediv(esub(e, conj(e)), emul(e_int(2), e_i())); }

// ------------------------------------------------------------- factories

inline expr make_exp(const expr& u) {
	if (u.num.zero()) return e_rat(1);
	// exp(q ln v * M) factors out as pow(v, q M / den); scan numerator terms
	expr factors = e_rat(1);
	poly keep;
	for (auto& [m, c] : u.num.t) {
		atom_id ln_at = -1;
		int ln_count = 0;
		for (auto& [a, e] : m)
			if (adat(a).kind == atom_kind::ln_fn) {
				ln_count += e;
				ln_at = a;
			}
		if (ln_count == 1) {
			mono rest;
			for (auto& [a, e] : m)
				if (a != ln_at) rest.emplace_back(a, e);
			poly rp;
			p_add_term(rp, rest, c);
			expr w = make_frac(std::move(rp), u.den);
			factors = emul(factors, make_pow(adat(ln_at).args[0], w));
		} else {
			p_add_term(keep, m, c);
		}
	}
	if (keep.zero()) return factors;
	expr resid = make_frac(std::move(keep), u.den);
	return emul(factors, e_atom(intern_exp(resid)));
}

inline atom_id intern_ln(const expr& arg) {
	atom_data d;
	d.kind = atom_kind::ln_fn;
	d.args = {arg};
	d.real_val = expr_real_structural(arg);
	return intern_atom(d);
}

inline std::vector<std::pair<long, int>> factor_small(mpz_class n) {
	std::vector<std::pair<long, int>> f;
	for (long p = 2; p <= 99991; p += (p == 2 ? 1 : 2)) {
		if (mpz_cmp_ui(n.get_mpz_t(), 1) <= 0) break;
		if (mpz_cmp_ui(n.get_mpz_t(), (unsigned long)p * (unsigned long)p) < 0) break;
		int e = 0;
		while (mpz_divisible_ui_p(n.get_mpz_t(), (unsigned long)p)) {
			mpz_divexact_ui(n.get_mpz_t(), n.get_mpz_t(), (unsigned long)p);
			++e;
		}
		if (e) f.emplace_back(p, e);
	}
	if (mpz_cmp_ui(n.get_mpz_t(), 1) > 0) {
		if (!n.fits_slong_p()) throw kernel_error("factor base too large");
		f.emplace_back(mpz_get_si(n.get_mpz_t()), 1);
	}
	return f;
}

// prime^expo with the integer part of a rational exponent folded into the coefficient
inline expr pow_prime(long p, const expr& expo) {
	if (expo.num.zero()) return e_rat(1);
	if (e_is_rat(expo)) {
		rat q = e_rat_val(expo);
		rat ip = rat_floor(q);
		rat fr = q - ip;
		expr r = e_rat(rat_pow(rat(p), to_long(ip)));
		if (fr != 0) r = emul(r, e_atom(intern_pow(e_int(p), e_rat(fr))));
		return r;
	}
	return e_atom(intern_pow(e_int(p), expo));
}

// atom^expo with the integer part of a rational exponent kept as a plain monomial power
inline expr pow_single_atom(atom_id a, const expr& expo) {
	if (expo.num.zero()) return e_rat(1);
	if (e_is_rat(expo)) {
		rat q = e_rat_val(expo);
		if (is_int(q)) return epow(e_atom(a), to_long(q));
		rat ip = rat_floor(q);
		rat fr = q - ip;
		expr r = ip != 0 ? epow(e_atom(a), to_long(ip)) : e_rat(1);
		return emul(r, e_atom(intern_pow(e_atom(a), e_rat(fr))));
	}
	return e_atom(intern_pow(e_atom(a), expo));
}

// ln of a single known-positive atom
inline expr make_ln_atom_shortcut(atom_id a) {
	const atom_data& d = adat(a);
	if (d.kind == atom_kind::exp_fn && d.real_val) return d.args[0];
	if (d.kind == atom_kind::pow_fn) return emul(d.args[1], make_ln(d.args[0]));
	return e_atom(intern_ln(e_atom(a)));
}

inline expr make_ln(const expr& u0) {
	if (u0.num.zero()) throw kernel_error("ln of zero");
	expr u = u0;
	expr r = e_zero();
	// rational part, prime-split when positive
	rat cn = p_content(u.num);
	rat cd = p_content(u.den);
	rat c = cn / cd;
	if (c > 0 && c != 1) {
		u = emul(u, e_rat(rat(1) / c));
		for (auto& [p, e] : factor_small(c.get_num()))
			r = eadd(r, emul(e_int(e), e_atom(intern_ln(e_int(p)))));
		for (auto& [p, e] : factor_small(c.get_den()))
			r = esub(r, emul(e_int(e), e_atom(intern_ln(e_int(p)))));
	}
	if (e_is_rat(u) && e_rat_val(u) == 1) return r;
	// split a single positive-atom-powered monomial over its factors
	if (u.den.is_const() && u.den.const_val() == 1 && u.num.t.size() == 1) {
		auto& [m, cc] = *u.num.t.begin();
		if (cc == 1) {
			mono rest;
			for (auto& [a, e] : m) {
				if (atom_positive(a))
					r = eadd(r, emul(e_int(e), make_ln_atom_shortcut(a)));
				else
					rest.emplace_back(a, e);
			}
			if (rest.empty()) return r;
			poly rp;
			p_add_term(rp, rest, rat(1));
			return eadd(r, e_atom(intern_ln(expr{std::move(rp), p_const(1)})));
		}
	}
	return eadd(r, e_atom(intern_ln(u)));
}

inline expr make_pow(const expr& base, const expr& expo) {
	if (expo.num.zero()) return e_rat(1);
	if (base.num.zero()) {
		if (e_is_rat(expo) && e_rat_val(expo) > 0) return e_zero();
		throw kernel_error("pow of zero base");
	}
	if (e_is_rat(expo)) {
		rat q = e_rat_val(expo);
		if (is_int(q)) return epow(base, to_long(q));
	}
	if (e_is_rat(base)) {
		rat b = e_rat_val(base);
		if (b == 1) return e_rat(1);
		if (b < 0) throw kernel_error("pow of negative rational base");
		expr r = e_rat(1);
		for (auto& [p, e] : factor_small(b.get_num()))
			r = emul(r, pow_prime(p, emul(e_int(e), expo)));
		for (auto& [p, e] : factor_small(b.get_den()))
			r = emul(r, pow_prime(p, emul(e_int(-e), expo)));
		return r;
	}
	// pow of a fraction distributes; the kernel's pow is the positive branch
	if (!(base.den.is_const() && base.den.const_val() == 1)) {
		expr n = expr{base.num, p_const(1)};
		expr d = expr{base.den, p_const(1)};
		return ediv(make_pow(n, expo), make_pow(d, expo));
	}
	poly P = base.num;
	rat c = p_content(P);
	expr r = e_rat(1);
	if (c != 1 && c > 0) {
		P = p_scale(P, rat(1) / c);
		r = make_pow(e_rat(c), expo);
	}
	if (P.t.size() == 1) {
		auto& [m, cc] = *P.t.begin();
		if (cc == 1) {
			mono rest;
			for (auto& [a, e] : m) {
				const atom_data& d = adat(a);
				if (d.kind == atom_kind::exp_fn && e == 1) {
					r = emul(r, make_exp(emul(expo, d.args[0])));
				} else if (d.kind == atom_kind::pow_fn && e == 1) {
					r = emul(r, make_pow(d.args[0], emul(expo, d.args[1])));
				} else if (atom_positive(a) || (m.size() == 1 && e == 1)) {
					r = emul(r, pow_single_atom(a, emul(e_int(e), expo)));
				} else {
					rest.emplace_back(a, e);
				}
			}
			if (!rest.empty()) {
				poly rp;
				p_add_term(rp, rest, rat(1));
				r = emul(r, e_atom(intern_pow(expr{std::move(rp), p_const(1)}, expo)));
			}
			return r;
		}
	}
	return emul(r, e_atom(intern_pow(expr{std::move(P), p_const(1)}, expo)));
}

inline expr sqrt_of(const expr& u) { return make_pow(u, e_rat(rat(1, 2))); }

inline expr make_abs(const expr& u) { return make_pow(emul(u, u), e_rat(rat(1, 2))); }

inline expr make_sin(const expr& u) {
	expr E = make_exp(emul(e_i(), u));
	return ediv(esub(E, ediv(e_rat(1), E)), emul(e_int(2), e_i()));
}

inline expr make_cos(const expr& u) {
	expr E = make_exp(emul(e_i(), u));
	return ediv(eadd(E, ediv(e_rat(1), E)), e_int(2));
}

inline expr make_tan(const expr& u) { return ediv(make_sin(u), make_cos(u)); }

// ----------------------------------------------------------------- zero test

inline bool is_zero(const expr& e) {
	if (e.num.zero()) return true;
	// guard: ln atoms with power-related arguments, pow atoms with the same
	// base whose exponents differ by a nonzero integer
	std::vector<atom_id> lns, pws;
	for (auto& [m, c] : e.num.t)
		for (auto& [a, k] : m) {
			atom_kind kk = adat(a).kind;
			if (kk == atom_kind::ln_fn) lns.push_back(a);
			if (kk == atom_kind::pow_fn) pws.push_back(a);
		}
	std::sort(lns.begin(), lns.end());
	lns.erase(std::unique(lns.begin(), lns.end()), lns.end());
	std::sort(pws.begin(), pws.end());
	pws.erase(std::unique(pws.begin(), pws.end()), pws.end());
	for (size_t i = 0; i < lns.size(); ++i)
		for (size_t j = i + 1; j < lns.size(); ++j) {
			const expr& ui = adat(lns[i]).args[0];
			const expr& uj = adat(lns[j]).args[0];
			for (int k = 2; k <= 3; ++k) {
				if (expr_same(ui, epow(uj, k)) || expr_same(uj, epow(ui, k)))
					throw kernel_error("undecidable atom combination");
			}
		}
	for (size_t i = 0; i < pws.size(); ++i)
		for (size_t j = i + 1; j < pws.size(); ++j) {
			const atom_data& di = adat(pws[i]);
			const atom_data& dj = adat(pws[j]);
			if (!expr_same(di.args[0], dj.args[0])) continue;
			expr diff = esub(di.args[1], dj.args[1]);
			if (e_is_rat(diff) && is_int(e_rat_val(diff)) && e_rat_val(diff) != 0)
				throw kernel_error("undecidable atom combination");
		}
	return false;
}

inline bool eq(const expr& a, const expr& b) { return is_zero(esub(a, b)); }

inline expr normalize(const expr& e) { return make_frac(e.num, e.den); }

}  // namespace nlsym
