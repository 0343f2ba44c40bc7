#include <catch2/catch_amalgamated.hpp>

#include <nlsym/determining.hpp>
#include <nlsym/print.hpp>

#include <random>

using namespace nlsym;

namespace {

std::mt19937 rng(1313);

int ri(int lo, int hi) { return std::uniform_int_distribution<int>(lo, hi)(rng); }

expr rand_tpoly() {
	expr t = t_var();
	expr r = e_rat(make_rat(ri(-3, 3), ri(1, 2)));
	r = eadd(r, emul(e_rat(make_rat(ri(-3, 3), ri(1, 2))), t));
	r = eadd(r, emul(e_rat(make_rat(ri(-2, 2), 1)), emul(t, t)));
	r = eadd(r, emul(e_rat(make_rat(ri(-1, 1), 1)), emul(t, emul(t, t))));
	return r;
}

bool has_label(const std::vector<det_equation>& eqs, const std::string& label) {
	for (auto& e : eqs)
		if (e.label == label) return true;
	return false;
}

expr symbolic_S() {
	declare_ufunc("@S", false);
	return e_atom(a_ufunc("@S", {0, 0, 0}, {t_var(), x_var(), rho_var()}));
}

}  // namespace

TEST_CASE("derivation reproduces the structural component equations") {
	auto sys = derive_determining_system_1d();
	for (const char* label :
	     {"xi^t_psi = 0", "xi^t_psi* = 0", "xi^x_psi = 0", "xi^x_psi* = 0", "xi^t_x = 0",
	      "xi^t_t = 2 xi^x_x", "eta_psi* = 0", "eta_psi_psi = 0", "psi eta_psi = eta",
	      "2 eta_psi_x = i xi^x_t"}) {
		INFO(label);
		CHECK(has_label(sys.equations, label));
	}
	CHECK(sys.equations.size() == 10);

	// residual of the solved family collapses to psi times the classifying condition
	CHECK(is_zero(esub(sys.final_residual, emul(psi_var(), sys.classifying))));
}

TEST_CASE("two-dimensional derivation locks rotation and amplitude drift") {
	auto sys = derive_determining_system_2d();
	for (const char* label :
	     {"xi^t_psi = 0", "xi^1_psi = 0", "xi^2_psi = 0", "xi^t_x1 = 0", "xi^t_x2 = 0",
	      "xi^t_t = 2 xi^1_1", "xi^t_t = 2 xi^2_2", "xi^1_2 + xi^2_1 = 0", "kappa_t = 0",
	      "2 eta_psi_x1 = i xi^1_t", "2 eta_psi_x2 = i xi^2_t", "psi eta_psi = eta",
	      "2 Re eta^1 = -tau_t"}) {
		INFO(label);
		CHECK(has_label(sys.equations, label));
	}
	CHECK(is_zero(esub(sys.final_residual, emul(psi_var(), sys.classifying))));
}

TEST_CASE("on-shell residual equals psi times the classifying condition") {
	expr S = symbolic_S();
	for (int it = 0; it < 50; ++it) {
		sfield1 s{rand_tpoly(), rand_tpoly(), rand_tpoly(), rand_tpoly()};
		expr lhs = invariance_residual(to_vfield(s), S);
		expr rhs = emul(psi_var(), classifying_residual_S(s, S));
		CHECK(is_zero(esub(lhs, rhs)));
	}
}

TEST_CASE("classifying residual vanishes on listed symmetries") {
	// power nonlinearity with vanishing potential admits the scaled dilation
	{
		auto inst = make_instance_Pgamma(e_int(1), e_int(2), e_zero());
		sfield1 q = extract_structured1(gen_Dgamma(t_var(), make_rat(2, 1)));
		CHECK(is_zero(classifying_residual(inst, q)));
	}
	// inverse-square potentials keep it for every complex strength
	{
		expr V = emul(eadd(e_atom(a_sym("alpha")), emul(e_i(), e_atom(a_sym("beta")))),
		              e_atom(coord_atom(1), -2));
		auto inst = make_instance_Pgamma(e_int(1), e_int(2), V);
		sfield1 q = extract_structured1(gen_Dgamma(t_var(), make_rat(2, 1)));
		CHECK(is_zero(classifying_residual(inst, q)));
	}
	// logarithmic nonlinearity: drifting Galilei boost against a linear potential
	{
		expr s1 = e_atom(a_sym("s1"));
		expr s2 = e_atom(a_sym("s2", true));
		expr nu = e_atom(a_sym("nu"));
		auto inst = make_instance_P0(eadd(s1, emul(e_i(), s2)),
		                           emul(emul(e_i(), nu), x_var()));
		sfield1 q = extract_structured1(gen_Gprime(t_var(), s1, s2, nu));
		CHECK(is_zero(classifying_residual(inst, q)));
		// and with a real nonlinearity coefficient
		auto eq0 = make_instance_P0(s1, emul(emul(e_i(), nu), x_var()));
		sfield1 q0 = extract_structured1(gen_Gprime(t_var(), s1, e_zero(), nu));
		CHECK(is_zero(classifying_residual(eq0, q0)));
	}
	// two dimensions: constant imaginary potential admits time translation
	{
		auto inst = make_instance_C(e_i());
		sfield2 q{e_int(1), e_zero(), e_zero(), e_zero(), e_zero()};
		CHECK(is_zero(classifying_residual(inst, q)));
	}
}

TEST_CASE("classifying residual rejects fields outside the class form") {
	declare_ufunc("fgen", false);
	declare_ufunc("Vpot", false);
	expr f = e_atom(a_ufunc("fgen", {0}, {rho_var()}));
	expr V = e_atom(a_ufunc("Vpot", {0, 0}, {t_var(), x_var()}));
	auto inst = make_instance_Vf(f, V);
	// time dilations do not preserve a fixed nonlinearity
	sfield1 bad{t_var(), e_zero(), e_zero(), e_zero()};
	CHECK_THROWS_AS(classifying_residual(inst, bad), kernel_error);
	// neither do amplitude scalings
	sfield1 bad2{e_zero(), e_zero(), e_zero(), e_int(1)};
	CHECK_THROWS_AS(classifying_residual(inst, bad2), kernel_error);

	auto eqp = make_instance_Pgamma(e_int(1), e_int(2), e_zero());
	sfield1 bad3{t_var(), e_zero(), e_zero(), e_int(1)};
	CHECK_THROWS_AS(classifying_residual(eqp, bad3), kernel_error);
	// the matched pair tau_t = -gamma zeta passes
	sfield1 good{t_var(), e_zero(), e_zero(), e_rat(make_rat(-1, 2))};
	CHECK_NOTHROW(classifying_residual(eqp, good));
}

TEST_CASE("splitting by the arbitrary element yields the class constraints") {
	{
		auto sp = split_by_arbitrary(class_tag::Vf);
		REQUIRE(sp.constraints.size() == 2);
		CHECK(sp.constraints[0].label == "tau_t = 0");
		CHECK(sp.constraints[1].label == "zeta = 0");
		// residual form: c0 V_t + chi V_x - chi_tt x/2 - lam_t
		expr V = e_atom(a_ufunc("@Vx", {0, 0}, {t_var(), x_var()}));
		expr want = emul(e_atom(a_sym("c0")), pd(V, coord_atom(0)));
		want = eadd(want, emul(uf_t("chi"), pd(V, coord_atom(1))));
		want = esub(want, emul(e_rat(make_rat(1, 2)), emul(Dt(Dt(uf_t("chi"))), x_var())));
		want = esub(want, uf_t("lam", 1));
		CHECK(is_zero(esub(sp.reduced, want)));
	}
	{
		auto sp = split_by_arbitrary(class_tag::P0);
		REQUIRE(sp.constraints.size() == 1);
		CHECK(sp.constraints[0].label == "tau_t = 0");
		// residual form: c0 V_t + chi V_x - chi_tt x/2 - lam_t + i zeta_t + sigma zeta
		expr V = e_atom(a_ufunc("@Vx", {0, 0}, {t_var(), x_var()}));
		expr sg = eadd(e_atom(a_sym("sigma1")), emul(e_i(), e_atom(a_sym("sigma2"))));
		expr want = emul(e_atom(a_sym("c0")), pd(V, coord_atom(0)));
		want = eadd(want, emul(uf_t("chi"), pd(V, coord_atom(1))));
		want = esub(want, emul(e_rat(make_rat(1, 2)), emul(Dt(Dt(uf_t("chi"))), x_var())));
		want = esub(want, uf_t("lam", 1));
		want = eadd(want, emul(e_i(), uf_t("zeta", 1)));
		want = eadd(want, emul(sg, uf_t("zeta")));
		CHECK(is_zero(esub(sp.reduced, want)));
	}
	{
		expr gam = e_atom(a_sym("gam", true));
		auto sp = split_by_arbitrary(class_tag::Pgamma, gam);
		REQUIRE(sp.constraints.size() == 1);
		CHECK(sp.constraints[0].label == "tau_t + gamma zeta = 0");
		// residual form: tau V_t + (tau_t x/2 + chi) V_x + tau_t V
		//   - tau_ttt x^2/8 - chi_tt x/2 - lam_t - i (1/gamma - 1/4) tau_tt
		expr V = e_atom(a_ufunc("@Vx", {0, 0}, {t_var(), x_var()}));
		expr tau = uf_t("tau");
		expr want = emul(tau, pd(V, coord_atom(0)));
		want = eadd(want, emul(eadd(emul(e_rat(make_rat(1, 2)), emul(Dt(tau), x_var())), uf_t("chi")),
		                       pd(V, coord_atom(1))));
		want = eadd(want, emul(Dt(tau), V));
		want = esub(want, emul(e_rat(make_rat(1, 8)), emul(Dt(Dt(Dt(tau))), emul(x_var(), x_var()))));
		want = esub(want, emul(e_rat(make_rat(1, 2)), emul(Dt(Dt(uf_t("chi"))), x_var())));
		want = esub(want, uf_t("lam", 1));
		want = esub(want, emul(emul(e_i(), gamma_prime(gam)), Dt(Dt(tau))));
		CHECK(is_zero(esub(sp.reduced, want)));
	}
	CHECK_THROWS_AS(split_by_arbitrary(class_tag::Pgamma, e_zero()), kernel_error);
	CHECK_THROWS_AS(split_by_arbitrary(class_tag::S), kernel_error);
}

TEST_CASE("kernel generators survive every member of their class") {
	// widest class: the phase rotation alone
	{
		auto inst = make_instance_S(symbolic_S());
		auto ker = kernel_algebra(inst);
		REQUIRE(ker.size() == 1);
		CHECK(is_zero(classifying_residual(inst, extract_structured1(ker[0]))));
		CHECK(is_zero(invariance_residual(inst, ker[0])));
	}
	declare_ufunc("Vpot", false);
	expr V = e_atom(a_ufunc("Vpot", {0, 0}, {t_var(), x_var()}));
	// logarithmic class, complex coefficient: damped amplitude-phase mixture
	{
		expr s1 = e_atom(a_sym("s1"));
		expr s2 = e_atom(a_sym("s2", true));
		auto inst = make_instance_P0(eadd(s1, emul(e_i(), s2)), V);
		auto ker = kernel_algebra(inst);
		REQUIRE(ker.size() == 2);
		for (auto& g : ker) CHECK(is_zero(classifying_residual(inst, extract_structured1(g))));
	}
	// logarithmic class, real coefficient: secular phase growth instead
	{
		expr s1 = e_atom(a_sym("s1"));
		auto inst = make_instance_P0(s1, V);
		auto ker = kernel_algebra(inst);
		REQUIRE(ker.size() == 2);
		sfield1 ip = extract_structured1(ker[1]);
		CHECK(eq(ip.zeta, e_int(1)));
		CHECK(eq(ip.lam, emul(s1, t_var())));
		for (auto& g : ker) CHECK(is_zero(classifying_residual(inst, extract_structured1(g))));
	}
	// two dimensions with a symbolic potential
	{
		declare_ufunc("Vpot2", false);
		expr V2 = e_atom(a_ufunc("Vpot2", {0, 0, 0}, {t_var(), x_var(1), x_var(2)}));
		auto inst = make_instance_C(V2);
		auto ker = kernel_algebra(inst);
		REQUIRE(ker.size() == 1);
		CHECK(is_zero(classifying_residual(inst, extract_structured2(ker[0]))));
		CHECK(is_zero(invariance_residual(inst, ker[0])));
	}
}

TEST_CASE("generic invariance residual reports the obstruction") {
	// a field with S_x != 0 fails x-translation by exactly S_x psi, the image of
	// chi = 1 under the classifying form
	expr S = symbolic_S();
	vfield dx = vf_zero(1);
	dx.xi[0] = e_int(1);
	expr expect = emul(e_atom(a_ufunc("@S", {0, 1, 0}, {t_var(), x_var(), rho_var()})), psi_var());
	CHECK(is_zero(esub(invariance_residual(dx, S), expect)));
	sfield1 shift{e_zero(), e_int(1), e_zero(), e_zero()};
	CHECK(is_zero(esub(classifying_residual_S(shift, S),
	                   e_atom(a_ufunc("@S", {0, 1, 0}, {t_var(), x_var(), rho_var()})))));

	// quartic power with the quadratic dilation: an exact symmetry
	expr Sq = emul(emul(rho_var(), rho_var()), emul(rho_var(), rho_var()));
	vfield d2 = gen_Dgamma(emul(t_var(), t_var()), make_rat(4, 1));
	CHECK(is_zero(invariance_residual(d2, Sq)));
}
