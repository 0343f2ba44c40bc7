#pragma once

// Deterministic plain-text rendering of kernel expressions. The output uses
// only the surface grammar the text parser accepts, so print -> parse is the
// identity on values:
//   rationals        3, -5/2
//   reserved names   t x1 x2 i rho phi
//   jets             psi, psi2, psi_t, psi_t11  (component then multiindex)
//   conjugation      conj(...)
//   functions        exp(u) ln(u) pow(b,e) Int(u)
//   unknowns         V(t,x1), V[1,0](t,x1) with per-slot derivative counts
//   operators        + - * / ^ and parentheses

#include "symcore.hpp"

#include <sstream>

namespace nlsym {

std::string expr_str(const expr& e);

inline std::string atom_str(atom_id id) {
	const atom_data& d = adat(id);
	switch (d.kind) {
		case atom_kind::sym:
		case atom_kind::sign_sym:
			return d.name;
		case atom_kind::csym:
			return d.conj_half ? "conj(" + d.name + ")" : d.name;
		case atom_kind::imag_unit:
			return "i";
		case atom_kind::rho_mod:
			return "rho";
		case atom_kind::polar_ang:
			return "phi";
		case atom_kind::jet: {
			std::string s = "psi";
			if (d.comp > 0) s += std::to_string(d.comp + 1);
			if (d.jmi != std::array<int, 3>{{0, 0, 0}}) {
				s += "_";
				for (int k = 0; k < d.jmi[0]; ++k) s += "t";
				for (int k = 0; k < d.jmi[1]; ++k) s += "1";
				for (int k = 0; k < d.jmi[2]; ++k) s += "2";
			}
			return d.conj_half ? "conj(" + s + ")" : s;
		}
		case atom_kind::exp_fn:
			return "exp(" + expr_str(d.args[0]) + ")";
		case atom_kind::ln_fn:
			return "ln(" + expr_str(d.args[0]) + ")";
		case atom_kind::pow_fn:
			return "pow(" + expr_str(d.args[0]) + ", " + expr_str(d.args[1]) + ")";
		case atom_kind::antider:
			return "Int(" + expr_str(d.args[0]) + ")";
		case atom_kind::ufunc: {
			std::string s = d.name;
			bool any = false;
			for (int k : d.fmi) any = any || k != 0;
			if (any) {
				s += "[";
				for (size_t k = 0; k < d.fmi.size(); ++k) {
					if (k) s += ",";
					s += std::to_string(d.fmi[k]);
				}
				s += "]";
			}
			s += "(";
			for (size_t k = 0; k < d.args.size(); ++k) {
				if (k) s += ", ";
				s += expr_str(d.args[k]);
			}
			s += ")";
			return d.conj_half ? "conj(" + s + ")" : s;
		}
	}
	return "?";
}

inline std::string mono_str(const mono& m) {
	std::string s;
	for (size_t k = 0; k < m.size(); ++k) {
		if (k) s += "*";
		s += atom_str(m[k].first);
		if (m[k].second != 1) s += "^" + std::to_string(m[k].second);
	}
	return s;
}

inline std::string poly_str(const poly& p) {
	if (p.zero()) return "0";
	std::string s;
	bool first = true;
	for (auto it = p.t.rbegin(); it != p.t.rend(); ++it) {
		const auto& [m, c] = *it;
		rat a = c;
		if (first) {
			if (a < 0) {
				s += "-";
				a = -a;
			}
		} else {
			s += a < 0 ? " - " : " + ";
			if (a < 0) a = -a;
		}
		if (m.empty())
			s += rat_str(a);
		else if (a == 1)
			s += mono_str(m);
		else
			s += rat_str(a) + "*" + mono_str(m);
		first = false;
	}
	return s;
}

inline std::string expr_str(const expr& e) {
	if (e.num.zero()) return "0";
	if (e.den.is_const() && e.den.const_val() == 1) {
		if (e.num.t.size() == 1) return poly_str(e.num);
		return "(" + poly_str(e.num) + ")";
	}
	return "(" + poly_str(e.num) + ")/(" + poly_str(e.den) + ")";
}

}  // namespace nlsym
