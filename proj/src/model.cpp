#include "prophetlab/model.hpp"

#include <algorithm>
#include <cmath>
#include <functional>
#include <string>

#include "prophetlab/errors.hpp"
#include "prophetlab/numerics.hpp"
#include "prophetlab/search1d.hpp"

namespace prophetlab::model {

namespace {

std::string cell(const char* name, int i, int j) {
    return std::string(name) + "[" + std::to_string(i) + "][" + std::to_string(j) + "]";
}

double clamp_unit(double v, const std::string& where) {
    if (!std::isfinite(v) || v < -numerics::kProbabilitySlack || v > 1.0 + numerics::kProbabilitySlack) {
        throw ValidationError(where + " = " + std::to_string(v) + " lies outside [0,1]");
    }
    return std::clamp(v, 0.0, 1.0);
}

}  // namespace

Instance::Instance(int k, std::vector<double> values, Matrix probs)
    : k_(k), values_(std::move(values)), probs_(std::move(probs)) {
    if (k_ < 1) {
        throw ValidationError("k must be at least 1, got " + std::to_string(k_));
    }
    if (probs_.rows() < 1) {
        throw ValidationError("an instance needs at least one agent");
    }
    if (probs_.cols() < 1) {
        throw ValidationError("an instance needs at least one type");
    }
    if (static_cast<int>(values_.size()) != probs_.cols()) {
        throw ValidationError("values has " + std::to_string(values_.size()) + " entries but probs has " +
                              std::to_string(probs_.cols()) + " columns");
    }
    for (std::size_t j = 0; j < values_.size(); ++j) {
        if (!std::isfinite(values_[j]) || values_[j] < 0.0) {
            throw ValidationError("values[" + std::to_string(j) + "] must be finite and nonnegative");
        }
        if (j > 0 && values_[j] > values_[j - 1]) {
            throw ValidationError("values must be nonincreasing: values[" + std::to_string(j) + "] > values[" +
                                  std::to_string(j - 1) + "]");
        }
    }
    for (int i = 0; i < n(); ++i) {
        double sum = 0.0;
        for (int j = 0; j < m(); ++j) {
            probs_(i, j) = clamp_unit(probs_(i, j), cell("probs", i, j));
            sum += probs_(i, j);
        }
        if (std::abs(sum - 1.0) > kRowSumTolerance) {
            throw ValidationError("probs row " + std::to_string(i) + " sums to " + std::to_string(sum) + ", not 1");
        }
    }
}

std::vector<double> Instance::gains() const {
    std::vector<double> d(values_.size());
    for (std::size_t j = 0; j < values_.size(); ++j) {
        d[j] = values_[j] - (j + 1 < values_.size() ? values_[j + 1] : 0.0);
    }
    return d;
}

Matrix Instance::cumulative() const {
    Matrix g(n(), m());
    for (int i = 0; i < n(); ++i) {
        double acc = 0.0;
        for (int j = 0; j < m(); ++j) {
            acc += probs_(i, j);
            g(i, j) = std::min(acc, 1.0);
        }
        g(i, m() - 1) = 1.0;
    }
    return g;
}

double Instance::expected_value(int agent) const {
    double e = 0.0;
    for (int j = 0; j < m(); ++j) {
        e += probs_(agent, j) * values_[static_cast<std::size_t>(j)];
    }
    return e;
}

TypeDistributions::TypeDistributions(Matrix cumulative) : g_(std::move(cumulative)) {
    if (g_.rows() < 1 || g_.cols() < 1) {
        throw ValidationError("G needs at least one agent and one type");
    }
    for (int i = 0; i < n(); ++i) {
        for (int j = 0; j < m(); ++j) {
            double v = clamp_unit(g_(i, j), cell("G", i, j));
            if (j > 0) {
                if (v < g_(i, j - 1) - kRowSumTolerance) {
                    throw ValidationError(cell("G", i, j) + " decreases along the row");
                }
                v = std::max(v, g_(i, j - 1));
            }
            g_(i, j) = v;
        }
        if (std::abs(g_(i, m() - 1) - 1.0) > kRowSumTolerance) {
            throw ValidationError(cell("G", i, m() - 1) + " must equal 1");
        }
        g_(i, m() - 1) = 1.0;
    }
}

TypeDistributions TypeDistributions::from_instance(const Instance& inst) {
    return TypeDistributions(inst.cumulative());
}

Matrix TypeDistributions::probabilities() const {
    Matrix p(n(), m());
    for (int i = 0; i < n(); ++i) {
        for (int j = 0; j < m(); ++j) {
            p(i, j) = prob(i, j);
        }
    }
    return p;
}

std::vector<double> TypeDistributions::column(int j) const {
    std::vector<double> c(static_cast<std::size_t>(n()));
    for (int i = 0; i < n(); ++i) {
        c[static_cast<std::size_t>(i)] = g_(i, j);
    }
    return c;
}

std::vector<double> acceptance_probabilities(const TypeDistributions& g, StaticThreshold rule) {
    if (rule.type < 0 || rule.type >= g.m()) {
        throw DomainError("threshold type index " + std::to_string(rule.type) + " out of range");
    }
    if (!(rule.rho >= 0.0 && rule.rho <= 1.0)) {
        throw DomainError("tie-break probability must lie in [0,1]");
    }
    std::vector<double> tau(static_cast<std::size_t>(g.n()));
    for (int i = 0; i < g.n(); ++i) {
        tau[static_cast<std::size_t>(i)] =
            std::clamp((1.0 - rule.rho) * g.at_or_zero(i, rule.type - 1) + rule.rho * g(i, rule.type), 0.0, 1.0);
    }
    return tau;
}

double proph_value(const Instance& inst) {
    const TypeDistributions g = TypeDistributions::from_instance(inst);
    const std::vector<double> gain = inst.gains();
    double v = 0.0;
    for (int j = 0; j < inst.m(); ++j) {
        if (gain[static_cast<std::size_t>(j)] == 0.0) {
            continue;
        }
        v += gain[static_cast<std::size_t>(j)] * numerics::poisbin_min_k_expect(numerics::ProbVector(g.column(j)), inst.k());
    }
    return v;
}

double proph_value_bruteforce(const Instance& inst) {
    const int n = inst.n();
    const int m = inst.m();
    double profiles = 1.0;
    for (int i = 0; i < n; ++i) {
        profiles *= m;
        if (profiles > 1e6) {
            throw SizeLimit("brute-force prophet needs m^n <= 1e6 profiles");
        }
    }
    std::vector<int> type(static_cast<std::size_t>(n), 0);
    std::vector<double> realized(static_cast<std::size_t>(n));
    const auto top = static_cast<std::size_t>(std::min(inst.k(), n));
    double total = 0.0;
    for (;;) {
        double w = 1.0;
        for (int i = 0; i < n; ++i) {
            w *= inst.probs()(i, type[static_cast<std::size_t>(i)]);
            realized[static_cast<std::size_t>(i)] = inst.values()[static_cast<std::size_t>(type[static_cast<std::size_t>(i)])];
        }
        if (w > 0.0) {
            std::partial_sort(realized.begin(), realized.begin() + static_cast<long>(top), realized.end(),
                              std::greater<>());
            double best = 0.0;
            for (std::size_t t = 0; t < top; ++t) {
                best += realized[t];
            }
            total += w * best;
        }
        int pos = 0;
        while (pos < n && ++type[static_cast<std::size_t>(pos)] == m) {
            type[static_cast<std::size_t>(pos)] = 0;
            ++pos;
        }
        if (pos == n) {
            break;
        }
    }
    return total;
}

double exante_value(const Instance& inst) {
    const Matrix g = inst.cumulative();
    const std::vector<double> gain = inst.gains();
    double v = 0.0;
    for (int j = 0; j < inst.m(); ++j) {
        double mass = 0.0;
        for (int i = 0; i < inst.n(); ++i) {
            mass += g(i, j);
        }
        v += gain[static_cast<std::size_t>(j)] * std::min(mass, static_cast<double>(inst.k()));
    }
    return v;
}

namespace {

// value[l][i]: optimal expected reward from agents i..n-1 with l slots left.
std::vector<std::vector<double>> dp_table(const Instance& inst) {
    const int n = inst.n();
    const int k = inst.k();
    std::vector<std::vector<double>> value(static_cast<std::size_t>(k + 1), std::vector<double>(static_cast<std::size_t>(n + 1), 0.0));
    for (int i = n - 1; i >= 0; --i) {
        for (int l = 1; l <= k; ++l) {
            const double keep = value[static_cast<std::size_t>(l)][static_cast<std::size_t>(i + 1)];
            const double cost = keep - value[static_cast<std::size_t>(l - 1)][static_cast<std::size_t>(i + 1)];
            double gain = 0.0;
            for (int j = 0; j < inst.m(); ++j) {
                gain += inst.probs()(i, j) * std::max(0.0, inst.values()[static_cast<std::size_t>(j)] - cost);
            }
            value[static_cast<std::size_t>(l)][static_cast<std::size_t>(i)] = gain + keep;
        }
    }
    return value;
}

}  // namespace

double dp_value(const Instance& inst) {
    return dp_table(inst)[static_cast<std::size_t>(inst.k())][0];
}

DpPolicy dp_policy(const Instance& inst) {
    const auto value = dp_table(inst);
    DpPolicy policy{Matrix(inst.n(), inst.k())};
    for (int i = 0; i < inst.n(); ++i) {
        for (int l = 1; l <= inst.k(); ++l) {
            policy.opportunity_cost(i, l - 1) = value[static_cast<std::size_t>(l)][static_cast<std::size_t>(i + 1)] -
                                                value[static_cast<std::size_t>(l - 1)][static_cast<std::size_t>(i + 1)];
        }
    }
    return policy;
}

double st_value(const Instance& inst, StaticThreshold rule) {
    const TypeDistributions g = TypeDistributions::from_instance(inst);
    const std::vector<double> tau = acceptance_probabilities(g, rule);
    const std::vector<double> avail = numerics::prefix_availability(tau, inst.k());
    double v = 0.0;
    for (int i = 0; i < inst.n(); ++i) {
        double reward = 0.0;
        for (int j = 0; j < rule.type; ++j) {
            reward += inst.probs()(i, j) * inst.values()[static_cast<std::size_t>(j)];
        }
        reward += rule.rho * inst.probs()(i, rule.type) * inst.values()[static_cast<std::size_t>(rule.type)];
        v += avail[static_cast<std::size_t>(i)] * reward;
    }
    return v;
}

namespace {

// Value of a static threshold and its derivative in rho, by forward-mode differentiation
// of the truncated count recursion.
std::pair<double, double> st_value_and_slope(const Instance& inst, const TypeDistributions& g, StaticThreshold rule) {
    const int k = inst.k();
    std::vector<double> mass(static_cast<std::size_t>(k), 0.0);
    std::vector<double> dmass(static_cast<std::size_t>(k), 0.0);
    mass[0] = 1.0;
    double value = 0.0;
    double slope = 0.0;
    for (int i = 0; i < inst.n(); ++i) {
        double avail = 0.0;
        double davail = 0.0;
        for (int c = 0; c < k; ++c) {
            avail += mass[static_cast<std::size_t>(c)];
            davail += dmass[static_cast<std::size_t>(c)];
        }
        double base = 0.0;
        for (int j = 0; j < rule.type; ++j) {
            base += inst.probs()(i, j) * inst.values()[static_cast<std::size_t>(j)];
        }
        const double top = inst.probs()(i, rule.type) * inst.values()[static_cast<std::size_t>(rule.type)];
        value += avail * (base + rule.rho * top);
        slope += davail * (base + rule.rho * top) + avail * top;

        const double b = g.prob(i, rule.type);
        const double tau = std::clamp(g.at_or_zero(i, rule.type - 1) + rule.rho * b, 0.0, 1.0);
        for (int c = k - 1; c >= 0; --c) {
            const auto uc = static_cast<std::size_t>(c);
            const double below = c > 0 ? mass[uc - 1] : 0.0;
            const double dbelow = c > 0 ? dmass[uc - 1] : 0.0;
            dmass[uc] = dmass[uc] * (1.0 - tau) - mass[uc] * b + dbelow * tau + below * b;
            mass[uc] = mass[uc] * (1.0 - tau) + below * tau;
        }
    }
    return {value, slope};
}

}  // namespace

ThresholdChoice best_st(const Instance& inst) {
    // Grid of 1001 points on (0,1], then the stationary point inside the best bracket.
    constexpr int kGrid = 1001;
    const TypeDistributions g = TypeDistributions::from_instance(inst);
    ThresholdChoice best{{0, 1.0}, -1.0};
    for (int type = 0; type < inst.m(); ++type) {
        const auto eval = [&](double rho) { return st_value_and_slope(inst, g, {type, rho}); };
        int best_t = kGrid;
        double best_v = eval(1.0).first;
        for (int t = 1; t < kGrid; ++t) {
            const double v = eval(static_cast<double>(t) / kGrid).first;
            if (v > best_v) {
                best_v = v;
                best_t = t;
            }
        }
        double rho = static_cast<double>(best_t) / kGrid;
        const double lo = static_cast<double>(std::max(best_t - 1, 1)) / kGrid;
        const double hi = static_cast<double>(std::min(best_t + 1, kGrid)) / kGrid;
        if (eval(lo).second > 0.0 && eval(hi).second < 0.0) {
            rho = search1d::bisect([&](double r) { return eval(r).second; }, lo, hi, 1e-13);
            best_v = eval(rho).first;
        }
        if (best_v > best.value) {
            best = {{type, rho}, best_v};
        }
    }
    best.value = st_value(inst, best.rule);
    return best;
}

double counter_uniform(std::uint64_t seed, std::uint64_t trial, std::uint64_t agent, std::uint64_t stream) {
    const auto mix = [](std::uint64_t z) {
        z += 0x9e3779b97f4a7c15ULL;
        z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
        z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
        return z ^ (z >> 31);
    };
    std::uint64_t h = mix(seed);
    h = mix(h ^ trial);
    h = mix(h ^ (agent * 4 + stream));
    return static_cast<double>(h >> 11) * 0x1.0p-53;
}

MonteCarloEstimate simulate_policy(const Instance& inst, const Policy& policy, long trials, std::uint64_t seed) {
    if (trials < 1) {
        throw DomainError("simulate_policy needs at least one trial");
    }
    const Matrix g = inst.cumulative();
    const auto* dp = std::get_if<DpPolicy>(&policy);
    const auto* st = std::get_if<StaticThreshold>(&policy);
    if (st != nullptr) {
        acceptance_probabilities(TypeDistributions(g), *st);
    }
    double mean = 0.0;
    double m2 = 0.0;
    for (long t = 0; t < trials; ++t) {
        int slots = inst.k();
        double reward = 0.0;
        for (int i = 0; i < inst.n() && slots > 0; ++i) {
            const double u = counter_uniform(seed, static_cast<std::uint64_t>(t), static_cast<std::uint64_t>(i), 0);
            int type = 0;
            while (type < inst.m() - 1 && u >= g(i, type)) {
                ++type;
            }
            const double value = inst.values()[static_cast<std::size_t>(type)];
            bool accept;
            if (dp != nullptr) {
                accept = value >= dp->opportunity_cost(i, slots - 1);
            } else {
                accept = type < st->type ||
                         (type == st->type &&
                          counter_uniform(seed, static_cast<std::uint64_t>(t), static_cast<std::uint64_t>(i), 1) < st->rho);
            }
            if (accept) {
                reward += value;
                --slots;
            }
        }
        const double delta = reward - mean;
        mean += delta / static_cast<double>(t + 1);
        m2 += delta * (reward - mean);
    }
    const double var = trials > 1 ? m2 / static_cast<double>(trials - 1) : 0.0;
    return {mean, std::sqrt(var / static_cast<double>(trials)), trials};
}

}  // namespace prophetlab::model
