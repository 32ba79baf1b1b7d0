#include "llsh/metrics.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <numbers>
#include <sstream>
#include <stdexcept>
#include <unordered_set>

#include "json.hpp"

namespace llsh {

double fitting_rate(const IntMatrix& pred, const IntMatrix& labels) {
    if (pred.rows != labels.rows || pred.cols != labels.cols) {
        throw std::invalid_argument("fitting_rate: shape mismatch");
    }
    if (pred.v.empty()) return 1.0;
    size_t matches = 0;
    for (size_t i = 0; i < pred.v.size(); ++i) {
        if (pred.v[i] == labels.v[i]) ++matches;
    }
    return static_cast<double>(matches) / static_cast<double>(pred.v.size());
}

double recall_at_k(const GroundTruth& results, const GroundTruth& truth, size_t k) {
    if (results.size() != truth.size()) {
        throw std::invalid_argument("recall_at_k: query count mismatch");
    }
    if (k == 0) throw std::invalid_argument("recall_at_k: k must be >= 1");
    if (truth.empty()) return 0.0;

    double total = 0.0;
    for (size_t qi = 0; qi < truth.size(); ++qi) {
        if (truth[qi].size() < k) {
            throw std::invalid_argument("recall_at_k: ground truth shallower than k");
        }
        std::unordered_set<uint32_t> want;
        want.reserve(k);
        for (size_t i = 0; i < k; ++i) want.insert(truth[qi][i].id);
        size_t hit = 0;
        size_t depth = std::min(k, results[qi].size());
        for (size_t i = 0; i < depth; ++i) {
            if (want.count(results[qi][i].id)) ++hit;
        }
        total += static_cast<double>(hit) / static_cast<double>(k);
    }
    return total / static_cast<double>(truth.size());
}

namespace {

// Density of |X| for standard p-stable X.
double abs_density(double x, int p) {
    if (p == 2) return std::sqrt(2.0 / std::numbers::pi) * std::exp(-0.5 * x * x);
    return 2.0 / (std::numbers::pi * (1.0 + x * x));  // p == 1, Cauchy
}

struct CollisionIntegrand {
    double c, r;
    int p;
    double operator()(double t) const { return abs_density(t / c, p) / c * (1.0 - t / r); }
};

double simpson_estimate(double a, double b, double fa, double fm, double fb) {
    return (b - a) / 6.0 * (fa + 4.0 * fm + fb);
}

// Adaptive Simpson with the usual |S2-S1| <= 15 tol acceptance, a forced
// minimum subdivision (the half- and full-interval estimates can coincide
// algebraically on smooth integrands, e.g. the Cauchy density at c=1, r=4,
// which would otherwise stop the recursion immediately) and a depth cap:
// near t=0 the integrand is a spike of width ~c, where the halving
// tolerance is unreachable in f64; panels hitting the cap return the
// Richardson-extrapolated estimate, which is already resolved there.
double adaptive(const CollisionIntegrand& f, double a, double fa, double b, double fb, double m,
                double fm, double whole, double tol, int depth, int forced) {
    double lm = 0.5 * (a + m), rm = 0.5 * (m + b);
    double flm = f(lm), frm = f(rm);
    double left = simpson_estimate(a, m, fa, flm, fm);
    double right = simpson_estimate(m, b, fm, frm, fb);
    double delta = left + right - whole;
    if (depth <= 0 || (forced <= 0 && std::abs(delta) <= 15.0 * tol)) {
        return left + right + delta / 15.0;
    }
    return adaptive(f, a, fa, m, fm, lm, flm, left, 0.5 * tol, depth - 1, forced - 1) +
           adaptive(f, m, fm, b, fb, rm, frm, right, 0.5 * tol, depth - 1, forced - 1);
}

}  // namespace

double collision_prob(double c, double r, int p) {
    if (!(c > 0.0)) throw std::invalid_argument("collision_prob: c must be positive");
    if (!(r > 0.0)) throw std::invalid_argument("collision_prob: r must be positive");
    if (p != 1 && p != 2) throw std::invalid_argument("collision_prob: p must be 1 or 2");

    CollisionIntegrand f{c, r, p};
    double a = 0.0, b = r, m = 0.5 * r;
    double fa = f(a), fb = f(b), fm = f(m);
    double whole = simpson_estimate(a, b, fa, fm, fb);
    double result = adaptive(f, a, fa, b, fb, m, fm, whole, 1e-9, 32, 6);
    return std::clamp(result, 0.0, 1.0);
}

int64_t time_op(const std::function<void()>& thunk, size_t reps) {
    if (reps < 1) throw std::invalid_argument("time_op: reps must be >= 1");
    using clock = std::chrono::steady_clock;
    thunk();  // warmup
    std::vector<int64_t> samples(reps);
    for (auto& s : samples) {
        auto start = clock::now();
        thunk();
        auto stop = clock::now();
        s = std::chrono::duration_cast<std::chrono::nanoseconds>(stop - start).count();
    }
    std::sort(samples.begin(), samples.end());
    return samples[samples.size() / 2];
}

namespace {

const char* kCsvColumns =
    "algorithm,dataset,kind,n,d,seed,L,k,r,M,m1,m2,m3,ensemble_size,topk,num_queries,"
    "recall,fitting_rate,build_time_ns,train_time_ns,mean_query_time_ns,hash_time_ns,"
    "index_bytes,lr,batch_size,max_epochs,patience,degenerate_columns";

template <typename T>
void put_opt(std::ostringstream& os, const std::optional<T>& v) {
    os << ',';
    if (v) os << *v;
}

}  // namespace

std::string BenchReport::csv_header() {
    std::string out = "# llsh-bench-csv v1\n";
    out += kCsvColumns;
    out += '\n';
    return out;
}

std::string BenchReport::csv_row() const {
    std::ostringstream os;
    os.precision(17);
    os << algorithm << ',' << dataset << ',' << kind << ',' << n << ',' << d << ',' << seed << ','
       << L << ',' << k << ',' << r << ',' << M << ',' << m1 << ',' << m2 << ',' << m3 << ','
       << ensemble_size << ',' << topk << ',' << num_queries;
    put_opt(os, recall);
    put_opt(os, fit_rate);
    put_opt(os, build_time_ns);
    put_opt(os, train_time_ns);
    put_opt(os, mean_query_time_ns);
    put_opt(os, hash_time_ns);
    put_opt(os, index_bytes);
    os << ',' << lr << ',' << batch_size << ',' << max_epochs << ',' << patience << ','
       << degenerate_columns << '\n';
    return os.str();
}

std::string BenchReport::json() const {
    nlohmann::json j;
    j["algorithm"] = algorithm;
    j["dataset"] = dataset;
    j["kind"] = kind;
    j["n"] = n;
    j["d"] = d;
    j["seed"] = seed;
    j["L"] = L;
    j["k"] = k;
    j["r"] = r;
    j["M"] = M;
    j["m1"] = m1;
    j["m2"] = m2;
    j["m3"] = m3;
    j["ensemble_size"] = ensemble_size;
    j["topk"] = topk;
    j["num_queries"] = num_queries;
    auto set_opt = [&](const char* key, const auto& v) {
        if (v) {
            j[key] = *v;
        } else {
            j[key] = nullptr;
        }
    };
    set_opt("recall", recall);
    set_opt("fitting_rate", fit_rate);
    set_opt("build_time_ns", build_time_ns);
    set_opt("train_time_ns", train_time_ns);
    set_opt("mean_query_time_ns", mean_query_time_ns);
    set_opt("hash_time_ns", hash_time_ns);
    set_opt("index_bytes", index_bytes);
    j["lr"] = lr;
    j["batch_size"] = batch_size;
    j["max_epochs"] = max_epochs;
    j["patience"] = patience;
    j["degenerate_columns"] = degenerate_columns;
    return j.dump();
}

}  // namespace llsh
