#pragma once

#include <gmpxx.h>

#include <cstdint>
#include <string>

namespace nlsym {

using rat = mpq_class;

inline rat make_rat(long num, long den = 1) {
	rat r(num, den);
	r.canonicalize();
	return r;
}

inline bool is_int(const rat& r) { return r.get_den() == 1; }

inline long to_long(const rat& r) { return mpz_get_si(r.get_num().get_mpz_t()); }

inline rat rat_pow(const rat& base, long e) {
	rat r(1);
	rat b = base;
	long n = e < 0 ? -e : e;
	while (n > 0) {
		if (n & 1) r *= b;
		b *= b;
		n >>= 1;
	}
	if (e < 0) r = rat(1) / r;
	return r;
}

inline std::string rat_str(const rat& r) { return r.get_str(); }

}  // namespace nlsym
