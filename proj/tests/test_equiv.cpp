#include <catch2/catch_amalgamated.hpp>

#include <nlsym/determining.hpp>
#include <nlsym/equiv.hpp>
#include <nlsym/print.hpp>
#include <nlsym/structured.hpp>

#include <random>

using namespace nlsym;

namespace {

constexpr int kRounds = 10;

std::mt19937 rng(9001);

int ri(int lo, int hi) { return std::uniform_int_distribution<int>(lo, hi)(rng); }

rat rq() { return make_rat(ri(-2, 2), ri(1, 2)); }

expr rpoly(int deg) {
	expr t = t_var();
	expr r = e_rat(rq());
	if (deg >= 1) r = eadd(r, emul(e_rat(rq()), t));
	if (deg >= 2) r = eadd(r, emul(e_rat(rq()), emul(t, t)));
	return r;
}

// increasing affine time map a t + b
expr raffine() {
	expr t = t_var();
	return eadd(emul(e_rat(make_rat(ri(1, 3), ri(1, 2))), t), e_rat(rq()));
}

// fractional-linear time map with positive determinant
expr rmobius() {
	for (;;) {
		int p1 = ri(-2, 2), p0 = ri(-2, 2), q1 = ri(-2, 2), q0 = ri(-2, 2);
		if (p1 * q0 - p0 * q1 <= 0) continue;
		expr t = t_var();
		expr num = eadd(emul(e_int(p1), t), e_int(p0));
		expr den = eadd(emul(e_int(q1), t), e_int(q0));
		return ediv(num, den);
	}
}

etr1 rand_member(class_tag cls, const expr& gamma = e_zero()) {
	expr T, Th, Ps;
	expr X = rpoly(2);
	switch (cls) {
	case class_tag::S:
		T = rmobius();
		Th = rpoly(2);
		Ps = rpoly(2);
		break;
	case class_tag::V:
		// constant modulus scale, so that the member acts on any nonlinearity
		T = raffine();
		Th = e_rat(rq());
		Ps = rpoly(2);
		break;
	case class_tag::P0:
		T = raffine();
		Th = rpoly(2);
		Ps = rpoly(2);
		break;
	case class_tag::Pgamma:
		T = raffine();
		Th = e_rat(rq());
		Ps = rpoly(2);
		break;
	default:
		throw kernel_error("rand_member: one-dimensional classes only");
	}
	etr1 g = continuous1(T, X, Th, Ps);
	g.ix = ri(0, 1) == 1;
	g.it = ri(0, 1) == 1;
	(void)gamma;
	return g;
}

const expr rot[4][2] = {
	{e_int(1), e_zero()},
	{e_rat(make_rat(3, 5)), e_rat(make_rat(4, 5))},
	{e_rat(make_rat(5, 13)), e_rat(make_rat(12, 13))},
	{e_rat(make_rat(8, 17)), e_rat(make_rat(15, 17))},
};

etr2 rand_member2() {
	etr2 g = continuous2(ri(0, 1) == 1 ? raffine() : rmobius(), rpoly(1), rpoly(1), rpoly(2));
	const expr* cs = rot[ri(0, 3)];
	g.o11 = cs[0];
	g.o12 = cs[1];
	g.o21 = ri(0, 1) == 1 ? eneg(cs[1]) : cs[1];
	// det +1 pairs the off-diagonal signs, det -1 mirrors the diagonal
	g.o22 = is_zero(eadd(g.o21, cs[1])) ? cs[0] : eneg(cs[0]);
	g.it = ri(0, 1) == 1;
	return g;
}

bool inst_eq(const equation_instance& a, const equation_instance& b) {
	return a.cls == b.cls && a.nx == b.nx && is_zero(esub(a.S, b.S)) && is_zero(esub(a.f, b.f)) &&
	       is_zero(esub(a.V, b.V)) && is_zero(esub(a.sigma, b.sigma)) &&
	       is_zero(esub(a.gamma, b.gamma));
}

equation_instance fixture(class_tag cls) {
	switch (cls) {
	case class_tag::S:
		return make_instance_S(eadd(emul(eadd(e_int(1), e_i()), emul(rho_var(), emul(rho_var(), rho_var()))),
		                            emul(t_var(), x_var())));
	case class_tag::V:
		return make_instance_V(make_exp(rho_var()), emul(e_i(), x_var()));
	case class_tag::P0:
		return make_instance_P0(eadd(e_int(1), e_i()), emul(t_var(), x_var()));
	default:
		return make_instance_Pgamma(eadd(e_int(2), e_i()), e_int(2), emul(e_i(), emul(x_var(), x_var())));
	}
}

}  // namespace

TEST_CASE("identity transformation belongs to every class and fixes every element") {
	etr1 id1;
	CHECK(validate_membership(id1, class_tag::F));
	CHECK(validate_membership(id1, class_tag::Fprime));
	CHECK(validate_membership(id1, class_tag::S));
	CHECK(validate_membership(id1, class_tag::V));
	CHECK(validate_membership(id1, class_tag::P0));
	CHECK(validate_membership(id1, class_tag::Pgamma, e_int(2)));
	CHECK(is_identity(id1));
	CHECK(validate_membership(etr2{}));

	for (class_tag cls : {class_tag::S, class_tag::V, class_tag::P0, class_tag::Pgamma}) {
		auto inst = fixture(cls);
		CHECK(inst_eq(push_element(id1, inst), inst));
	}
	auto inst2 = make_instance_C(emul(e_i(), eadd(emul(x_var(1), x_var(1)), emul(x_var(2), x_var(2)))));
	CHECK(inst_eq(push_element(etr2{}, inst2), inst2));
}

TEST_CASE("membership separates the phase- and scale-constrained classes") {
	expr t = t_var();

	// a pure phase drift lands in the free potential, so every class absorbs it
	etr1 drift = continuous1(t, e_zero(), e_zero(), t);
	CHECK(validate_membership(drift, class_tag::P0));
	CHECK(validate_membership(drift, class_tag::V));
	CHECK(validate_membership(drift, class_tag::S));

	// a modulus drift is absorbed by the logarithmic coupling only
	etr1 mdrift = continuous1(t, e_zero(), t);
	CHECK(validate_membership(mdrift, class_tag::P0));
	CHECK_FALSE(validate_membership(mdrift, class_tag::V));
	CHECK_FALSE(validate_membership(mdrift, class_tag::Pgamma, e_int(2)));
	CHECK(validate_membership(mdrift, class_tag::S));

	// a bare dilation carries the power-specific constant 2^(1/gamma)
	etr1 dil = continuous1(emul(e_int(2), t));
	CHECK(validate_membership(dil, class_tag::Pgamma, e_int(4)));
	CHECK(is_zero(esub(kappa_of(dil, e_int(4)), make_pow(e_int(2), e_rat(make_rat(1, 4))))));
	CHECK(validate_membership(dil, class_tag::V));

	// a quadratic time map leaves every affine-time subclass
	etr1 sq = continuous1(ediv(eneg(e_int(1)), t));
	CHECK(validate_membership(sq, class_tag::S));
	CHECK_FALSE(validate_membership(sq, class_tag::P0));
	CHECK_FALSE(validate_membership(sq, class_tag::V));
	// but the modulus scale can compensate it for a power nonlinearity
	etr1 tin = continuous1(ediv(eneg(e_int(1)), t), e_zero(), make_ln(t));
	CHECK(validate_membership(tin, class_tag::Pgamma, e_int(2)));
	CHECK(is_zero(esub(kappa_of(tin, e_int(2)), e_int(1))));

	// an additive component is tolerated by the widest classes only
	etr1 add = continuous1(t);
	add.phi0 = emul(t, x_var());
	CHECK(validate_membership(add, class_tag::F));
	CHECK(validate_membership(add, class_tag::Fprime));
	CHECK_FALSE(validate_membership(add, class_tag::S));
	add.phi0 = rho_var();
	CHECK_FALSE(validate_membership(add, class_tag::Fprime));

	CHECK_THROWS_AS(validate_membership(add, class_tag::Pgamma), kernel_error);
	CHECK_THROWS_AS(validate_membership(add, class_tag::Vf), kernel_error);
	CHECK_THROWS_AS(validate_membership(add, class_tag::C), kernel_error);
}

TEST_CASE("fixed-nonlinearity members freeze time rate, phase, and modulus scale") {
	expr t = t_var();
	auto inst = make_instance_Vf(emul(e_i(), emul(rho_var(), rho_var())), emul(e_i(), x_var()));

	CHECK(validate_membership(continuous1(eadd(t, e_int(3)), rpoly(2)), inst));
	CHECK_FALSE(validate_membership(continuous1(emul(e_int(2), t)), inst));
	CHECK(validate_membership(continuous1(t, e_zero(), e_zero(), t), inst));
	CHECK_FALSE(validate_membership(continuous1(t, e_zero(), e_int(1)), inst));

	// the time reflection needs a real nonlinearity
	etr1 refl;
	refl.it = true;
	CHECK_FALSE(validate_membership(refl, inst));
	auto real_inst = make_instance_Vf(emul(rho_var(), rho_var()), emul(e_i(), x_var()));
	CHECK(validate_membership(refl, real_inst));
}

TEST_CASE("non-invertible or nonlinear-fraction time maps are rejected") {
	expr t = t_var();
	CHECK_THROWS_AS(continuous1(e_int(1)), kernel_error);
	CHECK_THROWS_AS(continuous1(emul(t, t)), kernel_error);
	CHECK_THROWS_AS(continuous1(eneg(t)), kernel_error);  // decreasing branch needs the reflection

	expr ti = invert_time_map(ediv(eadd(emul(e_int(2), t), e_int(1)), eadd(t, e_int(3))));
	subst_map back;
	back[coord_atom(0)] = ediv(eadd(emul(e_int(2), t), e_int(1)), eadd(t, e_int(3)));
	CHECK(is_zero(esub(substitute(ti, back), t)));
}

TEST_CASE("composition and inversion satisfy the group laws") {
	expr t = t_var();
	etr1 g = continuous1(ediv(eadd(emul(e_int(2), t), e_int(1)), eadd(t, e_int(3))), eadd(t, e_int(1)),
	                     e_rat(make_rat(1, 3)), emul(t, t));
	g.ix = true;
	g.it = true;
	CHECK(is_identity(compose(g, invert(g))));
	CHECK(is_identity(compose(invert(g), g)));

	etr1 a = continuous1(eadd(emul(e_int(2), t), e_int(1)), emul(t, t), e_int(1), t);
	a.it = true;
	etr1 b = continuous1(ediv(eneg(e_int(1)), t), t, e_zero(), emul(e_int(2), t));
	b.ix = true;
	etr1 c = continuous1(eadd(t, e_int(2)), e_int(1), t, e_zero());
	CHECK(etr1_eq(compose(compose(a, b), c), compose(a, compose(b, c))));
}

TEST_CASE("the time inversion is an involution on the double cover") {
	expr t = t_var();
	etr1 g = continuous1(ediv(eneg(e_int(1)), t));
	etr1 gi = invert(g);
	CHECK(is_zero(esub(gi.T, g.T)));
	CHECK(is_identity(compose(g, invert(g))));

	// applying it twice returns the identity time map on the opposite sheet
	etr1 gg = compose(g, g);
	CHECK(is_zero(esub(gg.T, t)));
	CHECK(is_zero(eadd(gg.sT, e_int(1))));
}

TEST_CASE("affine members compose to affine members") {
	for (int round = 0; round < kRounds; ++round) {
		etr1 g1 = rand_member(class_tag::V);
		etr1 g2 = rand_member(class_tag::V);
		etr1 c = compose(g1, g2);
		CHECK(is_zero(Dt(Dt(c.T))));
		CHECK(is_zero(Dt(c.Th)));
		CHECK(validate_membership(c, class_tag::V));

		etr1 p1 = rand_member(class_tag::P0);
		etr1 p2 = rand_member(class_tag::P0);
		CHECK(validate_membership(compose(p1, p2), class_tag::P0));
	}
}

TEST_CASE("worked potential pushes reproduce the catalog") {
	expr t = t_var();
	expr x = x_var();

	// a real linear potential is removed by a quadratic drift
	{
		expr c1 = e_atom(a_sym("c1"));
		auto inst = make_instance_Pgamma(e_int(1), e_int(2), emul(c1, x));
		etr1 g = continuous1(t, eneg(emul(c1, emul(t, t))), e_zero(),
		                     emul(ediv(emul(c1, c1), e_int(3)), emul(t, emul(t, t))));
		REQUIRE(validate_membership(g, inst));
		auto out = push_element(g, inst);
		CHECK(is_zero(out.V));
		CHECK(is_zero(esub(out.sigma, e_int(1))));
		CHECK(is_zero(esub(out.gamma, e_int(2))));
	}

	// an imaginary inverse-time potential is removed by inverting time
	{
		expr b = e_atom(a_sym("b"));
		expr tb = eadd(t, b);
		auto inst = make_instance_Pgamma(e_int(1), e_int(2),
		                                 ediv(e_i(), emul(e_int(2), tb)));
		etr1 g = continuous1(ediv(eneg(e_int(1)), tb), e_zero(), make_ln(tb));
		REQUIRE(validate_membership(g, inst));
		CHECK(is_zero(esub(kappa_of(g, e_int(2)), e_int(1))));
		auto out = push_element(g, inst);
		CHECK(is_zero(out.V));
		CHECK(is_zero(esub(out.sigma, e_int(1))));
	}

	// inverting time swaps the imaginary inverse-time coefficient about 2 gamma'
	{
		expr nu = e_atom(a_sym("nu"));
		expr gam = e_atom(a_sym("gam"));
		auto inst = make_instance_Pgamma(e_int(1), gam, emul(emul(e_i(), nu), ediv(e_int(1), t)));
		etr1 g = continuous1(ediv(eneg(e_int(1)), t), e_zero(),
		                     emul(ediv(e_int(2), gam), make_ln(t)));
		REQUIRE(validate_membership(g, inst));
		auto out = push_element(g, inst);
		expr want = emul(emul(e_i(), esub(emul(e_int(2), gamma_prime(gam)), nu)), ediv(e_int(1), t));
		CHECK(is_zero(esub(out.V, want)));
		CHECK(is_zero(esub(gamma_prime(out.gamma), gamma_prime(inst.gamma))));
	}

	// a time-dependent modulus scale feeds the logarithmic coupling into the potential
	{
		expr s1 = e_atom(a_sym("s1"));
		expr th0 = e_atom(a_sym("th0"));
		auto inst = make_instance_P0(s1, e_zero());
		etr1 g = continuous1(t, e_zero(), emul(th0, t));
		REQUIRE(validate_membership(g, inst));
		auto out = push_element(g, inst);
		expr want = esub(eneg(emul(emul(s1, th0), t)), emul(e_i(), th0));
		CHECK(is_zero(esub(out.V, want)));
		CHECK(is_zero(esub(out.sigma, s1)));
	}
}

TEST_CASE("random members act within their class and compose functorially") {
	for (class_tag cls : {class_tag::S, class_tag::V, class_tag::P0, class_tag::Pgamma}) {
		auto inst = fixture(cls);
		for (int round = 0; round < kRounds; ++round) {
			etr1 g1 = rand_member(cls, inst.gamma);
			etr1 g2 = rand_member(cls, inst.gamma);
			REQUIRE(validate_membership(g1, inst));
			REQUIRE(validate_membership(compose(g1, g2), inst));
			REQUIRE(validate_membership(invert(g1), inst));
			CHECK(is_identity(compose(g1, invert(g1))));

			auto once = push_element(g1, inst);
			CHECK(once.cls == cls);
			auto twice = push_element(g2, once);
			CHECK(inst_eq(push_element(compose(g1, g2), inst), twice));
			CHECK(inst_eq(push_element(invert(g1), once), inst));
		}
	}
}

TEST_CASE("narrow members belong to every wider class") {
	for (int round = 0; round < kRounds; ++round) {
		etr1 v = rand_member(class_tag::V);
		etr1 p = rand_member(class_tag::P0);
		etr1 q = rand_member(class_tag::Pgamma, e_int(2));
		for (const etr1* g : {&v, &p, &q}) {
			CHECK(validate_membership(*g, class_tag::S));
			CHECK(validate_membership(*g, class_tag::Fprime));
			CHECK(validate_membership(*g, class_tag::F));
		}
		CHECK(validate_membership(v, class_tag::P0));
	}
}

TEST_CASE("pushed arbitrary elements transport the modulus ratio") {
	expr rho = rho_var();
	expr S = eadd(emul(rho, rho), emul(e_i(), emul(rho, emul(rho, rho))));
	expr ratio = invariant_rho_ratio(S);

	// a positive-time member relabels the ratio through the modulus rescale,
	// which must reach the occurrences folded into psi psi* pairs as well
	etr1 g = continuous1(eadd(emul(e_int(2), t_var()), e_int(1)), t_var(), e_int(1), t_var());
	expr pushed = invariant_rho_ratio(push_arbitrary(g, S));
	expr es = make_exp(eneg(e_int(1)));
	subst_map relabel;
	relabel[a_rho()] = emul(rho, es);
	relabel[a_jet(0, false, 0, 0, 0)] = emul(psi_var(), es);
	relabel[a_jet(0, true, 0, 0, 0)] = emul(psi_conj_var(), es);
	CHECK(is_zero(esub(pushed, substitute(ratio, relabel))));

	// the time reflection conjugates it
	etr1 refl;
	refl.it = true;
	CHECK(is_zero(esub(invariant_rho_ratio(push_arbitrary(refl, S)), conj(ratio))));
}

TEST_CASE("an additive component follows the group operations") {
	expr t = t_var();
	expr x = x_var();
	etr1 g = continuous1(eadd(emul(e_int(2), t), e_int(1)), t, e_int(1), emul(t, t));
	g.phi0 = eadd(emul(t, x), emul(e_i(), x));
	CHECK(validate_membership(g, class_tag::Fprime));
	CHECK(is_identity(compose(g, invert(g))));
	CHECK(is_identity(compose(invert(g), g)));

	etr1 h = continuous1(eadd(t, e_int(2)), e_int(1));
	h.phi0 = emul(e_i(), t);
	etr1 k = compose(g, h);
	CHECK(validate_membership(k, class_tag::Fprime));
	CHECK(is_identity(compose(k, invert(k))));
}

TEST_CASE("pushed vector fields solve the transformed classifying condition") {
	expr t = t_var();
	expr x = x_var();

	// scaling symmetry of the free cubic-power equation, through a fractional time map
	{
		auto inst = make_instance_Pgamma(e_int(1), e_int(2), e_zero());
		vfield q = gen_Dgamma(t, make_rat(2, 1));
		etr1 g = continuous1(ediv(eadd(emul(e_int(2), t), e_int(1)), eadd(t, e_int(3))),
		                     emul(t, t), make_ln(eadd(t, e_int(3))), t);
		REQUIRE(validate_membership(g, inst));
		auto out = push_element(g, inst);
		sfield1 s = extract_structured1(push_field(g, q));
		CHECK(is_zero(classifying_residual(out, s)));
	}

	// inverse-square potential with symbolic strength, through an affine member
	{
		expr alpha = e_atom(a_sym("alpha"));
		expr beta = e_atom(a_sym("beta"));
		expr V = emul(eadd(alpha, emul(e_i(), beta)), e_atom(coord_atom(1), -2));
		auto inst = make_instance_Pgamma(e_int(1), e_int(2), V);
		vfield q = gen_Dgamma(t, make_rat(2, 1));
		etr1 g = continuous1(emul(e_int(4), t), e_zero(), e_rat(make_rat(1, 3)), e_int(1));
		g.ix = true;
		REQUIRE(validate_membership(g, inst));
		auto out = push_element(g, inst);
		sfield1 s = extract_structured1(push_field(g, q));
		CHECK(is_zero(classifying_residual(out, s)));
	}

	// drifting boost of the logarithmic equation with a linear imaginary potential
	{
		expr s1 = e_atom(a_sym("s1"));
		expr nu = e_atom(a_sym("nu"));
		auto inst = make_instance_P0(s1, emul(emul(e_i(), nu), x));
		vfield q = gen_Gprime(t, s1, e_zero(), nu);
		etr1 g = continuous1(esub(emul(e_int(3), t), e_int(1)), emul(t, t), t, emul(t, t));
		REQUIRE(validate_membership(g, inst));
		auto out = push_element(g, inst);
		sfield1 s = extract_structured1(push_field(g, q));
		CHECK(is_zero(classifying_residual(out, s)));
	}
}

TEST_CASE("two-dimensional members act exactly") {
	expr t = t_var();
	expr x1 = x_var(1);
	expr x2 = x_var(2);

	// rotation member with a Pythagorean angle
	etr2 g = continuous2(emul(e_int(4), t), t, emul(e_int(2), t), emul(t, t));
	g.o11 = e_rat(make_rat(3, 5));
	g.o12 = e_rat(make_rat(4, 5));
	g.o21 = eneg(e_rat(make_rat(4, 5)));
	g.o22 = e_rat(make_rat(3, 5));
	REQUIRE(validate_membership(g));
	CHECK(is_identity(compose(g, invert(g))));
	CHECK(is_identity(compose(invert(g), g)));

	auto inst = make_instance_C(e_i());
	auto out = push_element(g, inst);
	expr want = eadd(esub(ediv(e_i(), e_int(4)), e_rat(make_rat(5, 64))),
	                 emul(e_rat(make_rat(1, 8)), t));
	CHECK(is_zero(esub(out.V, want)));

	// the pushed time translation still solves the classifying condition
	sfield2 s0{e_int(1), e_zero(), e_zero(), e_zero(), e_zero()};
	sfield2 s = extract_structured2(push_field(g, to_vfield(s0)));
	CHECK(is_zero(classifying_residual(out, s)));

	// a pure rotation fixes a radial potential
	etr2 r;
	r.o11 = e_rat(make_rat(5, 13));
	r.o12 = e_rat(make_rat(12, 13));
	r.o21 = eneg(e_rat(make_rat(12, 13)));
	r.o22 = e_rat(make_rat(5, 13));
	auto radial = make_instance_C(emul(e_i(), eadd(emul(x1, x1), emul(x2, x2))));
	CHECK(inst_eq(push_element(r, radial), radial));

	// non-orthogonal frames are rejected
	etr2 badf;
	badf.o11 = e_int(2);
	CHECK_FALSE(validate_membership(badf));
}

TEST_CASE("random two-dimensional members compose, invert, and push functorially") {
	auto inst = make_instance_C(e_i());
	for (int round = 0; round < kRounds; ++round) {
		etr2 g1 = rand_member2();
		etr2 g2 = rand_member2();
		REQUIRE(validate_membership(g1, inst));
		CHECK(is_identity(compose(g1, invert(g1))));

		auto once = push_element(g1, inst);
		auto twice = push_element(g2, once);
		CHECK(inst_eq(push_element(compose(g1, g2), inst), twice));
		CHECK(inst_eq(push_element(invert(g1), once), inst));
	}
}
