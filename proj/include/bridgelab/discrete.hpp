#pragma once

#include <vector>

#include "bridgelab/rng.hpp"

namespace bridgelab {

// Finite-state backward Markov chain, the exactly checkable miniature of
// the continuous sampler. Everything is a literal sum here, so the
// h-transform identities can be verified to rounding error instead of
// statistically.
using Dist = std::vector<double>;            // length S
using Kernel = std::vector<Dist>;            // S x S, row i is p(. | state i)

struct DiscreteChain {
    int S = 0;
    int T = 0;
    // P[t][i][j] = p(x_{t-1} = j | x_t = i), valid for t in [1, T].
    // P[0] is unused padding so indices line up with time.
    std::vector<Kernel> P;
    Dist pT;  // marginal at the noisy end
};

void validate_chain(const DiscreteChain& chain);

// Terminal-condition lift: h[0] = h0 and
//     h[t][i] = sum_j P[t][i][j] h[t-1][j],
// i.e. h at level t is the conditional expectation of h0 given x_t.
// h0 must be strictly positive.
std::vector<Dist> h_recursion(const DiscreteChain& chain, const Dist& h0);

// Tilted backward kernels
//     P^h[t][i][j] = P[t][i][j] h[t-1][j] / h[t][i].
// Rows sum to one by construction of the recursion; that is asserted by
// tests, not silently renormalized here.
std::vector<Kernel> doob_kernel(const DiscreteChain& chain, const std::vector<Dist>& h);

// Marginals p(x_t) of the base chain, pushed back from pT.
std::vector<Dist> backward_marginals(const DiscreteChain& chain);

// Brute force: h[t][i] as an explicit sum over all state paths from x_t = i
// down to x_0. Exponential in T, fine for the oracle sizes.
double enumerate_h(const DiscreteChain& chain, const Dist& h0, int t, int i);

// Max absolute deviation over all t and states between the marginals of the
// tilted chain (started from pT * h[T] / Z and propagated through the tilted
// kernels) and the closed form p(x_t) h(x_t) / Z with Z = E_{p(x_0)}[h0].
double verify_marginal_identity(const DiscreteChain& chain, const Dist& h0);

// Dirichlet(1,...,1) rows and terminal marginal.
DiscreteChain random_chain(int S, int T, Rng& rng);

}  // namespace bridgelab
