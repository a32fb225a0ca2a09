#include "bridgelab/discrete.hpp"

#include <cmath>
#include <string>

#include "bridgelab/errors.hpp"

namespace bridgelab {

namespace {

constexpr double kRowTol = 1e-12;

void check_dist(const Dist& p, int S, const char* what) {
    if (static_cast<int>(p.size()) != S) {
        throw ValidationError(std::string(what) + " has wrong length");
    }
    double total = 0.0;
    for (double v : p) {
        if (!(v >= 0.0)) throw ValidationError(std::string(what) + " has negative entries");
        total += v;
    }
    if (std::abs(total - 1.0) > kRowTol) {
        throw ValidationError(std::string(what) + " does not sum to 1");
    }
}

}  // namespace

void validate_chain(const DiscreteChain& chain) {
    if (chain.S < 1 || chain.T < 1) throw ValidationError("chain needs S >= 1 and T >= 1");
    if (static_cast<int>(chain.P.size()) != chain.T + 1) {
        throw ValidationError("chain needs T + 1 kernel slots (index 0 unused)");
    }
    for (int t = 1; t <= chain.T; ++t) {
        if (static_cast<int>(chain.P[t].size()) != chain.S) {
            throw ValidationError("kernel at t=" + std::to_string(t) + " has wrong row count");
        }
        for (int i = 0; i < chain.S; ++i) {
            check_dist(chain.P[t][i], chain.S, "kernel row");
        }
    }
    check_dist(chain.pT, chain.S, "terminal marginal");
}

std::vector<Dist> h_recursion(const DiscreteChain& chain, const Dist& h0) {
    validate_chain(chain);
    if (static_cast<int>(h0.size()) != chain.S) {
        throw ValidationError("h0 has wrong length");
    }
    for (double v : h0) {
        if (!(v > 0.0)) throw ValidationError("h0 must be strictly positive");
    }
    std::vector<Dist> h(chain.T + 1);
    h[0] = h0;
    for (int t = 1; t <= chain.T; ++t) {
        h[t].assign(chain.S, 0.0);
        for (int i = 0; i < chain.S; ++i) {
            for (int j = 0; j < chain.S; ++j) {
                h[t][i] += chain.P[t][i][j] * h[t - 1][j];
            }
        }
    }
    return h;
}

std::vector<Kernel> doob_kernel(const DiscreteChain& chain, const std::vector<Dist>& h) {
    validate_chain(chain);
    if (static_cast<int>(h.size()) != chain.T + 1) {
        throw ValidationError("h table has wrong length");
    }
    std::vector<Kernel> Ph(chain.T + 1);
    for (int t = 1; t <= chain.T; ++t) {
        Ph[t].assign(chain.S, Dist(chain.S, 0.0));
        for (int i = 0; i < chain.S; ++i) {
            if (!(h[t][i] > 0.0)) {
                throw NumericalError("h vanished at t=" + std::to_string(t));
            }
            for (int j = 0; j < chain.S; ++j) {
                Ph[t][i][j] = chain.P[t][i][j] * h[t - 1][j] / h[t][i];
            }
        }
    }
    return Ph;
}

std::vector<Dist> backward_marginals(const DiscreteChain& chain) {
    validate_chain(chain);
    std::vector<Dist> p(chain.T + 1);
    p[chain.T] = chain.pT;
    for (int t = chain.T; t >= 1; --t) {
        p[t - 1].assign(chain.S, 0.0);
        for (int i = 0; i < chain.S; ++i) {
            for (int j = 0; j < chain.S; ++j) {
                p[t - 1][j] += p[t][i] * chain.P[t][i][j];
            }
        }
    }
    return p;
}

double enumerate_h(const DiscreteChain& chain, const Dist& h0, int t, int i) {
    validate_chain(chain);
    if (t == 0) return h0[i];
    // Sum over the full path tree below (t, i). Depth t, branching S.
    double total = 0.0;
    for (int j = 0; j < chain.S; ++j) {
        total += chain.P[t][i][j] * enumerate_h(chain, h0, t - 1, j);
    }
    return total;
}

double verify_marginal_identity(const DiscreteChain& chain, const Dist& h0) {
    const auto h = h_recursion(chain, h0);
    const auto Ph = doob_kernel(chain, h);
    const auto p = backward_marginals(chain);

    double Z = 0.0;
    for (int j = 0; j < chain.S; ++j) Z += p[0][j] * h0[j];

    // Tilted chain started from the tilted terminal marginal.
    Dist ph(chain.S);
    for (int i = 0; i < chain.S; ++i) ph[i] = chain.pT[i] * h[chain.T][i] / Z;

    double worst = 0.0;
    for (int t = chain.T; t >= 0; --t) {
        for (int j = 0; j < chain.S; ++j) {
            worst = std::max(worst, std::abs(ph[j] - p[t][j] * h[t][j] / Z));
        }
        if (t == 0) break;
        Dist next(chain.S, 0.0);
        for (int i = 0; i < chain.S; ++i) {
            for (int j = 0; j < chain.S; ++j) {
                next[j] += ph[i] * Ph[t][i][j];
            }
        }
        ph = std::move(next);
    }
    return worst;
}

DiscreteChain random_chain(int S, int T, Rng& rng) {
    auto dirichlet_row = [&](int n) {
        Dist row(n);
        double total = 0.0;
        for (double& v : row) {
            // Exponential draws normalized to a flat Dirichlet sample.
            v = -std::log(1.0 - rng.uniform());
            total += v;
        }
        for (double& v : row) v /= total;
        return row;
    };
    DiscreteChain chain;
    chain.S = S;
    chain.T = T;
    chain.P.resize(T + 1);
    for (int t = 1; t <= T; ++t) {
        chain.P[t].resize(S);
        for (int i = 0; i < S; ++i) chain.P[t][i] = dirichlet_row(S);
    }
    chain.pT = dirichlet_row(S);
    validate_chain(chain);
    return chain;
}

}  // namespace bridgelab
