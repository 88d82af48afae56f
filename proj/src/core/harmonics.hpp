#pragma once

#include <cstdint>
#include <vector>

namespace sphfit::harmonics {

// Dimension of the space of degree-k spherical harmonics on S^d.
std::int64_t dim_harmonic(int d, int k);

// Gegenbauer polynomial of index (d-1)/2 and degree k, normalized so that
// its value at t = 1 is 1.  For d = 2 this is the Legendre polynomial.
// Inputs slightly outside [-1, 1] (up to 1e-12) are clamped; anything worse
// is rejected.
double gegenbauer(int d, int k, double t);

// Evaluates degrees 0..kmax at a single t into out[0..kmax].
void gegenbauer_batch(int d, int kmax, double t, double* out);

std::vector<double> gegenbauer_all(int d, int kmax, double t);

// Clamps t into [-1, 1], throwing if it deviates by more than 1e-12.
double clamp_cosine(double t);

} // namespace sphfit::harmonics
