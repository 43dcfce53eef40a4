#pragma once

#include <array>
#include <cstddef>

// Reference values computed once with 25+ digit arithmetic-geometric
// quadrature, frozen here so the library's own quadrature is tested against
// numbers it did not produce.
namespace torusot::testing::frozen {

// radial moments I_k = integral_0^1 r^k exp(-1/(1-r^2)) dr
inline constexpr std::array<double, 8> kRadialMoments = {
    0.22199690808403972,   0.074247753387961024,  0.035100738376487705,
    0.019401769789080956,  0.011761799785572384,  0.0075870318524812512,
    0.0051199117567722136, 0.0035764208473017119,
};

// bump normalizers: kNorm[d-1] * integral over the unit ball of the profile = 1
inline constexpr std::array<double, 3> kNorm = {
    2.252283621043581,
    2.1435657757922366,
    2.2671167396083265,
};

// C0(d, p) = (integral |x|^p K(x) dx)^(1/p) for p = 1..4; row d-1
inline constexpr std::array<std::array<double, 4>, 3> kC0 = {{
    {0.33445399770997533, 0.39763505411846958, 0.44377701757993246, 0.47976848223334884},
    {0.47275152142420446, 0.51118607514344387, 0.54108250055487969, 0.56538873023598475},
    {0.55274534629383373, 0.57886696396719852, 0.60013904797438431, 0.6179972689678613},
}};

struct KappaSpot {
  double rho;
  double value;
};

inline constexpr std::array<KappaSpot, 12> kKappaD1 = {{
    {0.5, 0.406548218726182},
    {1.0, -0.0965273328701918},
    {2.0, 0.000654996465064393},
    {4.0, 0.00316838341710707},
    {8.0, -9.7357003e-5},
    {12.0, -3.1657687e-5},
    {16.0, 1.6039231e-6},
    {20.0, 1.8801444e-6},
    {24.0, 3.5420861e-7},
    {32.0, -6.4656237e-8},
    {40.0, -2.5899663e-9},
    {50.0, 1.4130728e-9},
}};

inline constexpr std::array<KappaSpot, 9> kKappaD2 = {{
    {0.5, 0.4922148409},
    {1.0, -0.03886602526},
    {2.0, 0.009645674194},
    {4.0, 0.001153812584},
    {8.0, -7.031988813e-5},
    {14.4, -2.891389388e-6},
    {16.0, 1.417409035e-6},
    {24.0, -9.969695819e-9},
    {25.6, -8.879591864e-9},
}};

inline constexpr std::array<KappaSpot, 9> kKappaD3 = {{
    {0.5, 0.5542509852},
    {1.0, 0.01687556165},
    {2.0, 0.0102132586},
    {4.0, 0.0001583129908},
    {8.0, -2.606825992e-5},
    {14.4, -8.54551295e-7},
    {16.0, 4.359791557e-7},
    {24.0, -1.729278843e-8},
    {25.6, 8.070300451e-9},
}};

}  // namespace torusot::testing::frozen
