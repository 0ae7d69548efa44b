#include "sfc/symbolic.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <functional>
#include <limits>

#include <boost/math/tools/roots.hpp>

#include "sfc/errors.hpp"

namespace sfc {

const char* to_string(Membership m) {
    switch (m) {
        case Membership::M0: return "M0";
        case Membership::M1: return "M1";
        case Membership::Neither: return "NEITHER";
    }
    return "NEITHER";
}

Membership classify_angle(const ScenarioConfig& cfg, double phi) {
    const double d = phi - cfg.psi_eps;
    if (d > -kPi + kBoundaryTol && d < -kBoundaryTol) return Membership::M0;
    if (d > kBoundaryTol && d < kPi - kBoundaryTol) return Membership::M1;
    return Membership::Neither;
}

Membership membership(const ScenarioConfig& cfg, const FieldSpec& spec, const PlanePoint& p) {
    if (!(std::abs(p.psi) <= cfg.alpha)) throw Error(ErrorKind::Domain, "psi outside [-alpha, alpha]");
    if (!(p.delta >= cfg.delta1 - kLevelTol && p.delta <= cfg.delta2 + kLevelTol)) {
        throw Error(ErrorKind::Domain, "delta outside [delta1, delta2]");
    }
    return classify_angle(cfg, exit_angle(cfg, spec, p));
}

double angle_gap(const ScenarioConfig& cfg, const FieldSpec& spec) {
    return phi_extremum(cfg, spec, cfg.delta2, false) - phi_extremum(cfg, spec, cfg.delta1, true);
}

SymbolSequence parse_symbols(const std::string& text, int offset) {
    if (text.empty()) throw Error(ErrorKind::Parameter, "symbol sequence must be nonempty");
    SymbolSequence s;
    s.offset = offset;
    for (char c : text) {
        if (c != '0' && c != '1') throw Error(ErrorKind::Parameter, "symbols must be 0 or 1");
        s.symbols.push_back(c - '0');
    }
    return s;
}

std::string wide_to_string(const Wide& w) { return w.str(45, std::ios_base::scientific); }

namespace {

double to_d(const Wide& w) { return static_cast<double>(w); }

// Double evaluations of R jump by about the integrator tolerance where the step count changes, so
// Newton can cycle near 1e-12. Below kFreezeRel the direct points are frozen and the rest of the
// iteration runs on the linear correction around them.
constexpr double kFreezeRel = 1e-9;
constexpr double kSnapRel = 1e-8;

// Quadratic model of R around an anchor point, fitted by central differences.
struct Model {
    double a_psi = 0.0, a_delta = 0.0;
    std::array<double, 2> c{};
    Eigen::Matrix2d j = Eigen::Matrix2d::Zero();
    std::array<Eigen::Matrix2d, 2> h{Eigen::Matrix2d::Zero(), Eigen::Matrix2d::Zero()};
};

struct Rule {
    bool modeled = false;
    Model model;
};

// Multiple-shooting orbit on a depth-j curve: p[0] = (0, t), p[k+1] = R(p[k]), x = R(p[j-1]).
struct Orbit {
    Wide t;
    std::vector<WidePoint> p;
    WidePoint x;
};

struct Sample {
    double m = 0.0;
    Orbit orbit;
    double phi = 0.0;
    double level = 0.0;
    double image_psi = 0.0;
};

struct Node {
    int depth = 0;
    std::vector<int> prefix;
    std::vector<Rule> rules;
    Orbit lo, hi;  // orbits whose curve point sits at level delta1 and delta2
    Wide A, B;
    std::vector<Sample> samples;
    std::optional<Crossings> cross;
    std::array<Orbit, 4> cross_orbits;  // at m_a0, m_b0, m_a1, m_b1
    std::array<std::unique_ptr<Node>, 2> child;

    // Finite-difference Jacobians of the direct indices, refreshed when the point moves.
    std::vector<Eigen::Matrix2d> jac;
    std::vector<PlanePoint> jac_at;
};

struct StepEval {
    WidePoint value;
    Eigen::Matrix2d jac;
};

}  // namespace

struct ItineraryBuilder::Impl {
    ScenarioConfig cfg;
    FieldSpec spec;
    std::unique_ptr<Node> base;
    std::size_t nodes = 0;
    std::size_t evals = 0;

    // Small memo of raw return-map evaluations keyed by the exact double argument.
    std::array<std::pair<PlanePoint, ReturnEval>, 8> memo{};
    std::size_t memo_next = 0;
    std::size_t memo_used = 0;

    Impl(const ScenarioConfig& c, const FieldSpec& s) : cfg(c), spec(s) {}

    ReturnEval raw(const PlanePoint& p) {
        for (std::size_t k = 0; k < memo_used; ++k) {
            if (memo[k].first == p) return memo[k].second;
        }
        ++evals;
        ReturnEval e = return_map_eval(cfg, spec, p);
        memo[memo_next] = {p, e};
        memo_next = (memo_next + 1) % memo.size();
        memo_used = std::min(memo_used + 1, memo.size());
        return e;
    }

    Model fit_model(const PlanePoint& a) {
        Model md;
        md.a_psi = a.psi;
        md.a_delta = a.delta;
        const double hp = 1e-6;
        const double hd = 1e-4 * std::abs(a.delta);
        auto f = [&](double dp, double dd) {
            const PlanePoint im = raw({a.psi + dp, a.delta + dd}).image;
            return Eigen::Vector2d(im.psi, im.delta);
        };
        const Eigen::Vector2d f0 = f(0, 0);
        const Eigen::Vector2d fp0 = f(hp, 0), fm0 = f(-hp, 0), f0p = f(0, hd), f0m = f(0, -hd);
        const Eigen::Vector2d fpp = f(hp, hd), fpm = f(hp, -hd), fmp = f(-hp, hd), fmm = f(-hp, -hd);
        md.c = {f0(0), f0(1)};
        md.j.col(0) = (fp0 - fm0) / (2 * hp);
        md.j.col(1) = (f0p - f0m) / (2 * hd);
        for (int o = 0; o < 2; ++o) {
            md.h[o](0, 0) = (fp0(o) - 2 * f0(o) + fm0(o)) / (hp * hp);
            md.h[o](1, 1) = (f0p(o) - 2 * f0(o) + f0m(o)) / (hd * hd);
            md.h[o](0, 1) = md.h[o](1, 0) = (fpp(o) - fpm(o) - fmp(o) + fmm(o)) / (4 * hp * hd);
        }
        return md;
    }

    void refresh_jacobian(Node& n, std::size_t k, const PlanePoint& d) {
        const double hp = 1e-7;
        const double hd = 1e-5 * std::abs(d.delta);
        const PlanePoint f0 = raw(d).image;
        const PlanePoint fp = raw({d.psi + hp, d.delta}).image;
        const PlanePoint fd = raw({d.psi, d.delta + hd}).image;
        n.jac[k] << (fp.psi - f0.psi) / hp, (fd.psi - f0.psi) / hd, (fp.delta - f0.delta) / hp, (fd.delta - f0.delta) / hd;
        n.jac_at[k] = d;
    }

    // R at index k of node n; direct indices use the double evaluation plus a linear sub-ulp correction.
    StepEval apply_rule(Node& n, int k, const WidePoint& p, std::optional<PlanePoint>& frozen) {
        StepEval out;
        const Rule& r = n.rules[static_cast<std::size_t>(k)];
        if (r.modeled) {
            const Model& md = r.model;
            const Wide dp = p.psi - md.a_psi;
            const Wide dd = p.delta - md.a_delta;
            const double dpd = to_d(dp), ddd = to_d(dd);
            WidePoint v;
            const Wide q0 = dp * dp, q1 = dp * dd, q2 = dd * dd;
            v.psi = md.c[0] + md.j(0, 0) * dp + md.j(0, 1) * dd +
                    0.5 * (md.h[0](0, 0) * q0 + 2 * md.h[0](0, 1) * q1 + md.h[0](1, 1) * q2);
            v.delta = md.c[1] + md.j(1, 0) * dp + md.j(1, 1) * dd +
                      0.5 * (md.h[1](0, 0) * q0 + 2 * md.h[1](0, 1) * q1 + md.h[1](1, 1) * q2);
            out.value = v;
            out.jac = md.j;
            for (int o = 0; o < 2; ++o) {
                out.jac(o, 0) += md.h[o](0, 0) * dpd + md.h[o](0, 1) * ddd;
                out.jac(o, 1) += md.h[o](1, 0) * dpd + md.h[o](1, 1) * ddd;
            }
            return out;
        }
        PlanePoint d{to_d(p.psi), to_d(p.delta)};
        if (frozen) {
            if (std::abs(d.psi - frozen->psi) <= kSnapRel * (std::abs(d.psi) + 1e-3) &&
                std::abs(d.delta - frozen->delta) <= kSnapRel * std::abs(d.delta)) {
                d = *frozen;
            }
        }
        const auto kk = static_cast<std::size_t>(k);
        if (n.jac.size() <= kk) {
            n.jac.resize(kk + 1, Eigen::Matrix2d::Zero());
            n.jac_at.resize(kk + 1, PlanePoint{std::numeric_limits<double>::quiet_NaN(), 0.0});
        }
        // Refresh once the point has moved by 1e-5 in psi or 1e-3 relative in delta.
        if (!(std::abs(d.psi - n.jac_at[kk].psi) <= 1e-5 &&
              std::abs(d.delta - n.jac_at[kk].delta) <= 1e-3 * std::abs(d.delta))) {
            refresh_jacobian(n, kk, d);
        }
        const Eigen::Matrix2d& jk = n.jac[kk];
        const PlanePoint im = raw(d).image;
        const Wide ep = p.psi - d.psi;
        const Wide ed = p.delta - d.delta;
        out.value.psi = Wide(im.psi) + jk(0, 0) * ep + jk(0, 1) * ed;
        out.value.delta = Wide(im.delta) + jk(1, 0) * ep + jk(1, 1) * ed;
        out.jac = jk;
        return out;
    }

    // Newton on the shooting system of node n with final level m.
    void solve(Node& n, Orbit& o, double m) {
        const int j = n.depth;
        if (j == 0) {
            o.t = m;
            o.p.clear();
            o.x = {Wide(0), Wide(m)};
            return;
        }
        if (static_cast<int>(o.p.size()) != j) throw Error(ErrorKind::Resolution, "orbit guess has the wrong depth");
        const int dim = 2 * j - 1;
        std::vector<std::optional<PlanePoint>> frozen(static_cast<std::size_t>(j));
        double prev_rel = std::numeric_limits<double>::infinity();
        int stalled = 0;
        Eigen::MatrixXd M(dim, dim);
        Eigen::VectorXd F(dim);
        for (int it = 0; it < 80; ++it) {
            o.p[0].psi = 0;
            o.p[0].delta = o.t;
            M.setZero();
            std::vector<WidePoint> res(static_cast<std::size_t>(j));
            for (int k = 0; k < j; ++k) {
                const StepEval s = apply_rule(n, k, o.p[static_cast<std::size_t>(k)], frozen[static_cast<std::size_t>(k)]);
                // Column block of p_k: t only for k = 0.
                const int row = 2 * k;
                if (k < j - 1) {
                    const WidePoint& nx = o.p[static_cast<std::size_t>(k) + 1];
                    const Wide r0 = s.value.psi - nx.psi;
                    const Wide r1 = s.value.delta - nx.delta;
                    F(row) = to_d(r0);
                    F(row + 1) = to_d(r1);
                    if (k == 0) {
                        M(row, 0) = s.jac(0, 1);
                        M(row + 1, 0) = s.jac(1, 1);
                    } else {
                        M(row, 2 * k - 1) = s.jac(0, 0);
                        M(row, 2 * k) = s.jac(0, 1);
                        M(row + 1, 2 * k - 1) = s.jac(1, 0);
                        M(row + 1, 2 * k) = s.jac(1, 1);
                    }
                    M(row, 2 * k + 1) = -1.0;
                    M(row + 1, 2 * k + 2) = -1.0;
                } else {
                    o.x = s.value;
                    F(row) = to_d(s.value.delta - m);
                    if (k == 0) {
                        M(row, 0) = s.jac(1, 1);
                    } else {
                        M(row, 2 * k - 1) = s.jac(1, 0);
                        M(row, 2 * k) = s.jac(1, 1);
                    }
                }
            }
            const Eigen::VectorXd du = M.partialPivLu().solve(-F);
            if (!du.allFinite()) throw Error(ErrorKind::Resolution, "singular shooting system");
            double rel = std::abs(du(0)) / std::abs(to_d(o.t));
            o.t += du(0);
            for (int k = 1; k < j; ++k) {
                WidePoint& pk = o.p[static_cast<std::size_t>(k)];
                const double sp = std::abs(to_d(pk.psi)) + 1e-3;
                const double sd = std::abs(to_d(pk.delta)) + 1e-30;
                rel = std::max(rel, std::max(std::abs(du(2 * k - 1)) / sp, std::abs(du(2 * k)) / sd));
                pk.psi += du(2 * k - 1);
                pk.delta += du(2 * k);
            }
            if (rel < kFreezeRel) {
                for (int k = 0; k < j; ++k) {
                    if (!frozen[static_cast<std::size_t>(k)] && !n.rules[static_cast<std::size_t>(k)].modeled) {
                        const WidePoint& pk = o.p[static_cast<std::size_t>(k)];
                        frozen[static_cast<std::size_t>(k)] = PlanePoint{to_d(pk.psi), to_d(pk.delta)};
                    }
                }
            }
            if (rel <= 1e-46) return;
            if (rel < 1e-13 && rel > 0.5 * prev_rel) {
                if (++stalled >= 3) return;
            } else {
                stalled = 0;
            }
            prev_rel = std::min(prev_rel, rel);
        }
        throw Error(ErrorKind::Resolution, "shooting Newton did not converge at depth " + std::to_string(j));
    }

    Sample evaluate(Node& n, double m, const Orbit& guess) {
        Sample s;
        s.m = m;
        s.orbit = guess;
        solve(n, s.orbit, m);
        const PlanePoint x{to_d(s.orbit.x.psi), m};
        const ReturnEval e = raw(x);
        s.phi = e.angle;
        s.level = e.image.delta;
        s.image_psi = e.image.psi;
        return s;
    }

    static Orbit extrapolate(const Sample& a, const Sample& b, double m) {
        // Secant predictor through the two previous samples.
        const double w = (m - b.m) / (b.m - a.m);
        Orbit o = b.orbit;
        o.t = b.orbit.t + (b.orbit.t - a.orbit.t) * w;
        for (std::size_t k = 0; k < o.p.size(); ++k) {
            o.p[k].psi = b.orbit.p[k].psi + (b.orbit.p[k].psi - a.orbit.p[k].psi) * w;
            o.p[k].delta = b.orbit.p[k].delta + (b.orbit.p[k].delta - a.orbit.p[k].delta) * w;
        }
        return o;
    }

    void sample_node(Node& n) {
        if (!n.samples.empty()) return;
        const double d1 = cfg.delta1, d2 = cfg.delta2;
        const std::size_t count = kInitialSamples;
        std::vector<double> ms(count);
        for (std::size_t i = 0; i < count; ++i) ms[i] = d1 * std::pow(d2 / d1, static_cast<double>(i) / (count - 1));
        ms.front() = d1;
        ms.back() = d2;
        std::vector<Sample> out;
        out.reserve(count);
        out.push_back(evaluate(n, d1, n.lo));
        for (std::size_t i = 1; i + 1 < count; ++i) {
            const Orbit guess = out.size() >= 2 ? extrapolate(out[out.size() - 2], out.back(), ms[i]) : out.back().orbit;
            out.push_back(evaluate(n, ms[i], guess));
        }
        out.push_back(evaluate(n, d2, n.hi));
        // Dyadic refinement where the exit angle jumps too far between neighbours.
        for (;;) {
            bool refined = false;
            std::vector<Sample> next;
            next.reserve(out.size() * 2);
            for (std::size_t i = 0; i + 1 < out.size(); ++i) {
                next.push_back(out[i]);
                if (std::abs(out[i + 1].phi - out[i].phi) > kAngleJump) {
                    const double mm = std::sqrt(out[i].m * out[i + 1].m);
                    if (!(mm > out[i].m && mm < out[i + 1].m)) continue;
                    next.push_back(evaluate(n, mm, out[i].orbit));
                    refined = true;
                }
            }
            next.push_back(out.back());
            out.swap(next);
            if (!refined) break;
            if (out.size() > kMaxSamples) throw Error(ErrorKind::Resolution, "angle sampling exceeded 2^20 points");
        }
        n.samples = std::move(out);
    }

    using Field = std::function<double(const Sample&)>;

    Sample root(Node& n, const Sample& a, const Sample& b, const Field& f) {
        const double fa = f(a), fb = f(b);
        if (fa == 0.0) return a;
        if (fb == 0.0) return b;
        const double tol = 1e-13 * (cfg.delta2 - cfg.delta1);
        Sample best = std::abs(fa) < std::abs(fb) ? a : b;
        auto g = [&](double m) {
            const Sample& near = std::abs(m - a.m) < std::abs(m - b.m) ? a : b;
            Sample s = evaluate(n, m, near.orbit);
            const double v = f(s);
            if (std::abs(v) < std::abs(f(best))) best = s;
            return v;
        };
        std::uintmax_t iters = 100;
        auto stop = [tol](double x, double y) { return std::abs(y - x) <= tol; };
        const auto br = boost::math::tools::toms748_solve(g, a.m, b.m, fa, fb, stop, iters);
        const double mr = 0.5 * (br.first + br.second);
        if (std::abs(best.m - mr) <= tol) return best;
        const Sample& near = std::abs(mr - a.m) < std::abs(mr - b.m) ? a : b;
        return evaluate(n, mr, near.orbit);
    }

    static bool changes(double fa, double fb) { return (fa < 0.0) != (fb < 0.0); }

    // First sign change of f along seq, refined to a root.
    std::optional<Sample> first_root(Node& n, const std::vector<Sample>& seq, const Field& f) {
        for (std::size_t i = 0; i + 1 < seq.size(); ++i) {
            if (changes(f(seq[i]), f(seq[i + 1]))) return root(n, seq[i], seq[i + 1], f);
        }
        return std::nullopt;
    }

    std::optional<Sample> last_root(Node& n, const std::vector<Sample>& seq, const Field& f) {
        for (std::size_t i = seq.size() - 1; i > 0; --i) {
            if (changes(f(seq[i - 1]), f(seq[i]))) return root(n, seq[i - 1], seq[i], f);
        }
        return std::nullopt;
    }

    // Samples strictly between two points plus the two points as ends.
    std::vector<Sample> range(const Node& n, const Sample& lo, const Sample& hi) const {
        std::vector<Sample> seq{lo};
        for (const auto& s : n.samples) {
            if (s.m > lo.m && s.m < hi.m) seq.push_back(s);
        }
        seq.push_back(hi);
        return seq;
    }

    const Crossings& crossings(Node& n) {
        if (n.cross) return *n.cross;
        sample_node(n);
        const double psi = cfg.psi_eps, d1 = cfg.delta1, d2 = cfg.delta2;
        auto phi_minus = [&](double target) { return Field([target](const Sample& s) { return s.phi - target; }); };
        auto level_minus = [](double target) { return Field([target](const Sample& s) { return s.level - target; }); };
        auto fail = [&](const char* what) {
            return Error(ErrorKind::Resolution, std::string("crossing structure not found (") + what + ") at depth " +
                                                    std::to_string(n.depth));
        };
        const Sample& first = n.samples.front();
        const Sample& last = n.samples.back();

        const auto bp0 = first_root(n, n.samples, phi_minus(psi));
        if (!bp0) throw fail("angle psi");
        const auto ap0 = last_root(n, range(n, first, *bp0), phi_minus(psi - kPi));
        if (!ap0) throw fail("angle psi - pi");
        const auto b0 = first_root(n, range(n, *ap0, *bp0), level_minus(d2));
        if (!b0) throw fail("level delta2 in band 0");
        const auto a0 = last_root(n, range(n, *ap0, *b0), level_minus(d1));
        if (!a0) throw fail("level delta1 in band 0");

        const auto bp1 = first_root(n, range(n, *bp0, last), phi_minus(psi + kPi));
        if (!bp1) throw fail("angle psi + pi");
        // Without a later return to psi the band starts at the shared crossing b'0.
        auto ap1 = last_root(n, range(n, *bp0, *bp1), phi_minus(psi));
        if (!ap1) ap1 = bp0;
        const auto b1 = first_root(n, range(n, *ap1, *bp1), level_minus(d1));
        if (!b1) throw fail("level delta1 in band 1");
        const auto a1 = last_root(n, range(n, *ap1, *b1), level_minus(d2));
        if (!a1) throw fail("level delta2 in band 1");

        if (!(a0->m < b0->m && b0->m < a1->m && a1->m < b1->m)) {
            throw Error(ErrorKind::Resolution, "crossings out of order at depth " + std::to_string(n.depth));
        }
        Crossings c;
        c.m_a0 = a0->m;
        c.m_b0 = b0->m;
        c.m_a1 = a1->m;
        c.m_b1 = b1->m;
        c.m_band0_lo = ap0->m;
        c.m_band0_hi = bp0->m;
        c.m_band1_lo = ap1->m;
        c.m_band1_hi = bp1->m;
        c.samples = n.samples.size();
        n.cross_orbits = {a0->orbit, b0->orbit, a1->orbit, b1->orbit};
        c.reversed = b1->orbit.t < a0->orbit.t;
        if (c.reversed) {
            c.a0 = b1->orbit.t;
            c.b0 = a1->orbit.t;
            c.a1 = b0->orbit.t;
            c.b1 = a0->orbit.t;
        } else {
            c.a0 = a0->orbit.t;
            c.b0 = b0->orbit.t;
            c.a1 = a1->orbit.t;
            c.b1 = b1->orbit.t;
        }
        n.cross = c;
        return *n.cross;
    }

    static Orbit extend(const Orbit& o) {
        Orbit e = o;
        if (e.p.empty()) {
            e.p.push_back({Wide(0), o.t});
        } else {
            e.p.push_back(o.x);
        }
        return e;
    }

    static double span(const WidePoint& a, const WidePoint& b) {
        return std::max(std::abs(to_d(a.psi - b.psi)), std::abs(to_d(a.delta - b.delta)));
    }

    Node& child(Node& n, int s) {
        auto& slot = n.child[static_cast<std::size_t>(s)];
        if (slot) return *slot;
        crossings(n);
        auto c = std::make_unique<Node>();
        c->depth = n.depth + 1;
        c->prefix = n.prefix;
        c->prefix.push_back(s);
        // Band 0 runs from level delta1 at a0 to delta2 at b0; band 1 from delta2 at a1 to delta1 at b1.
        c->lo = extend(n.cross_orbits[s == 0 ? 0 : 3]);
        c->hi = extend(n.cross_orbits[s == 0 ? 1 : 2]);
        c->rules.resize(static_cast<std::size_t>(c->depth));
        for (int k = 0; k < c->depth; ++k) {
            if (k < n.depth && n.rules[static_cast<std::size_t>(k)].modeled) {
                c->rules[static_cast<std::size_t>(k)] = n.rules[static_cast<std::size_t>(k)];
                continue;
            }
            const WidePoint& a = c->lo.p[static_cast<std::size_t>(k)];
            const WidePoint& b = c->hi.p[static_cast<std::size_t>(k)];
            if (span(a, b) <= kModelSpan) {
                Rule r;
                r.modeled = true;
                r.model = fit_model({to_d((a.psi + b.psi) / 2), to_d((a.delta + b.delta) / 2)});
                c->rules[static_cast<std::size_t>(k)] = r;
            }
        }
        solve(*c, c->lo, cfg.delta1);
        solve(*c, c->hi, cfg.delta2);
        c->A = std::min(c->lo.t, c->hi.t);
        c->B = std::max(c->lo.t, c->hi.t);
        if (!(c->A >= n.A && c->B <= n.B && c->A < c->B)) {
            throw Error(ErrorKind::RefinementInconsistency,
                        "refined interval not nested at step " + std::to_string(n.depth));
        }
        ++nodes;
        slot = std::move(c);
        return *slot;
    }

    Node& rootnode() {
        if (!base) {
            if (!(cfg.delta1 < cfg.delta2)) throw Error(ErrorKind::Domain, "delta1 must be below delta2");
            base = std::make_unique<Node>();
            solve(*base, base->lo, cfg.delta1);
            solve(*base, base->hi, cfg.delta2);
            base->A = cfg.delta1;
            base->B = cfg.delta2;
            ++nodes;
        }
        return *base;
    }

    Node& walk(const std::vector<int>& prefix) {
        Node* n = &rootnode();
        for (std::size_t k = 0; k < prefix.size(); ++k) {
            const int s = prefix[k];
            if (s != 0 && s != 1) throw Error(ErrorKind::Parameter, "symbols must be 0 or 1");
            try {
                n = &child(*n, s);
            } catch (const Error& e) {
                if (e.kind() == ErrorKind::RefinementInconsistency || e.kind() == ErrorKind::Resolution) throw;
                throw Error(ErrorKind::Resolution, "step " + std::to_string(k) + ": " + e.what());
            }
        }
        return *n;
    }
};

ItineraryBuilder::ItineraryBuilder(const ScenarioConfig& cfg, const FieldSpec& spec)
    : impl_(std::make_unique<Impl>(cfg, spec)) {}

ItineraryBuilder::~ItineraryBuilder() = default;

const ScenarioConfig& ItineraryBuilder::config() const { return impl_->cfg; }
std::size_t ItineraryBuilder::node_count() const { return impl_->nodes; }
std::size_t ItineraryBuilder::evaluations() const { return impl_->evals; }

const Crossings& ItineraryBuilder::crossings(const std::vector<int>& prefix) {
    Node& n = impl_->walk(prefix);
    return impl_->crossings(n);
}

CurveSegment ItineraryBuilder::segment(const std::vector<int>& prefix) {
    Node& n = impl_->walk(prefix);
    return {n.A, n.B, n.depth};
}

std::vector<CurveSample> ItineraryBuilder::samples(const std::vector<int>& prefix) {
    Node& n = impl_->walk(prefix);
    impl_->sample_node(n);
    std::vector<CurveSample> out;
    out.reserve(n.samples.size());
    for (const auto& s : n.samples) {
        out.push_back({s.orbit.t, s.m, to_d(s.orbit.x.psi), s.phi, s.image_psi, s.level});
    }
    return out;
}

ItineraryResult ItineraryBuilder::forward(const SymbolSequence& seq) {
    const int n = static_cast<int>(seq.symbols.size());
    if (n < 1) throw Error(ErrorKind::Parameter, "symbol sequence must be nonempty");
    Impl& im = *impl_;
    const ScenarioConfig& cfg = im.cfg;
    ItineraryResult res;
    res.symbols = seq;
    res.tol_scale = cfg.tol_scale;
    std::vector<int> prefix;
    Node* node = &im.rootnode();
    for (int j = 0; j < n; ++j) {
        prefix.push_back(seq.symbols[static_cast<std::size_t>(j)]);
        node = &im.walk(prefix);
        res.intervals.emplace_back(node->A, node->B);
    }
    res.t_lo = node->A;
    res.t_hi = node->B;

    // Witness: the orbit whose final level sits halfway between delta1 and delta2, reached by continuation.
    const double mid = 0.5 * (cfg.delta1 + cfg.delta2);
    Orbit o = node->lo;
    constexpr int kSteps = 16;
    for (int k = 1; k <= kSteps; ++k) {
        const double m = cfg.delta1 + (mid - cfg.delta1) * k / kSteps;
        im.solve(*node, o, m);
    }
    res.witness_t = o.t;
    if (!(o.t >= node->A && o.t <= node->B)) {
        throw Error(ErrorKind::RefinementInconsistency, "witness outside the final interval");
    }

    // Orbit points and independent re-evaluation.
    res.orbit.push_back({0.0, to_d(o.t)});
    for (int k = 1; k < n; ++k) res.orbit.push_back({to_d(o.p[static_cast<std::size_t>(k)].psi), to_d(o.p[static_cast<std::size_t>(k)].delta)});
    const PlanePoint last{to_d(o.x.psi), to_d(o.x.delta)};
    for (int k = 0; k < n; ++k) {
        const ReturnEval e = im.raw(res.orbit[static_cast<std::size_t>(k)]);
        res.angles.push_back(e.angle);
        res.memberships.push_back(classify_angle(cfg, e.angle));
        res.levels.push_back(e.image.delta);
        const PlanePoint nx = k + 1 < n ? res.orbit[static_cast<std::size_t>(k) + 1] : last;
        res.step_residuals.push_back(std::max(std::abs(e.image.psi - nx.psi), std::abs(e.image.delta - nx.delta)));
    }
    for (int k = 0; k < n; ++k) {
        const auto want = seq.symbols[static_cast<std::size_t>(k)] == 0 ? Membership::M0 : Membership::M1;
        const double lv = res.levels[static_cast<std::size_t>(k)];
        const bool ok = res.memberships[static_cast<std::size_t>(k)] == want && lv >= cfg.delta1 - kLevelTol &&
                        lv <= cfg.delta2 + kLevelTol && res.step_residuals[static_cast<std::size_t>(k)] <= kStepTol;
        if (!ok) {
            throw Error(ErrorKind::RefinementInconsistency, "verification failed at step " + std::to_string(k));
        }
    }
    return res;
}

Crossings find_crossings(const ScenarioConfig& cfg, const FieldSpec& spec, const CurveSegment& seg) {
    if (seg.depth != 0) throw Error(ErrorKind::Domain, "only the base segment is addressable without a prefix");
    if (!(cfg.delta1 < cfg.delta2)) throw Error(ErrorKind::Domain, "delta1 must be below delta2");
    const double lo = static_cast<double>(seg.t_lo), hi = static_cast<double>(seg.t_hi);
    if (lo != cfg.delta1 || hi != cfg.delta2) throw Error(ErrorKind::Domain, "base segment must span [delta1, delta2]");
    ItineraryBuilder b(cfg, spec);
    return b.crossings({});
}

ItineraryResult build_forward_itinerary(const ScenarioConfig& cfg, const FieldSpec& spec, const SymbolSequence& seq,
                                        int n) {
    if (n < 1 || static_cast<int>(seq.symbols.size()) != n) throw Error(ErrorKind::Parameter, "need exactly n >= 1 symbols");
    if (seq.offset != 0) throw Error(ErrorKind::Parameter, "forward itineraries start at offset 0");
    try {
        ItineraryBuilder b(cfg, spec);
        return b.forward(seq);
    } catch (const Error& e) {
        if (e.kind() != ErrorKind::RefinementInconsistency) throw;
    }
    ScenarioConfig tight = cfg;
    tight.tol_scale *= 0.01;
    ItineraryBuilder b(tight, spec);
    return b.forward(seq);
}

ItineraryResult build_window_trajectory(const ScenarioConfig& cfg, const FieldSpec& spec, const SymbolSequence& seq,
                                        int window, int n_forward, bool compare_previous) {
    if (window < 0 || n_forward < 1) throw Error(ErrorKind::Parameter, "window must be >= 0 and n_forward >= 1");
    if (seq.offset != -window || static_cast<int>(seq.symbols.size()) != window + n_forward) {
        throw Error(ErrorKind::Parameter, "symbols must cover indices -window .. n_forward-1");
    }
    SymbolSequence shifted{seq.symbols, 0};
    ItineraryResult r = build_forward_itinerary(cfg, spec, shifted, window + n_forward);
    r.symbols = seq;
    if (compare_previous && window >= 1) {
        SymbolSequence prev{std::vector<int>(seq.symbols.begin() + 1, seq.symbols.end()), 0};
        const ItineraryResult q = build_forward_itinerary(cfg, spec, prev, window - 1 + n_forward);
        const PlanePoint& x = r.orbit[static_cast<std::size_t>(window)];
        const PlanePoint& y = q.orbit[static_cast<std::size_t>(window - 1)];
        r.window_discrepancy = std::hypot(x.psi - y.psi, x.delta - y.delta);
    }
    return r;
}

RealizationCheck check_realization(const ScenarioConfig& cfg, const FieldSpec& spec, const ItineraryResult& r) {
    RealizationCheck c;
    const std::size_t n = r.orbit.size();
    for (std::size_t k = 0; k < n; ++k) {
        const ReturnEval e = return_map_eval(cfg, spec, r.orbit[k]);
        const auto want = r.symbols.symbols[k] == 0 ? Membership::M0 : Membership::M1;
        bool bad = false;
        if (classify_angle(cfg, e.angle) != want) {
            c.memberships_ok = false;
            bad = true;
        }
        const double lv = e.image.delta;
        const double excess = std::max(cfg.delta1 - lv, lv - cfg.delta2);
        c.worst_level_excess = std::max(c.worst_level_excess, excess);
        if (excess > kLevelTol) {
            c.levels_ok = false;
            bad = true;
        }
        if (k + 1 < n) {
            const double step = std::max(std::abs(e.image.psi - r.orbit[k + 1].psi), std::abs(e.image.delta - r.orbit[k + 1].delta));
            c.worst_step = std::max(c.worst_step, step);
            if (step > kStepTol) {
                c.steps_ok = false;
                bad = true;
            }
        }
        if (bad && c.first_bad_index < 0) c.first_bad_index = static_cast<int>(k) + r.symbols.offset;
    }
    return c;
}

}  // namespace sfc
