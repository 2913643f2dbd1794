#pragma once

// Spanner configuration: target stretch slack, the Lambda slope constant,
// calibrated stretch-constant table, tolerance, and seeding.
//
// The calibration constants c1..c8 bound the measured stretch of each
// construction as 1 + c*eps; they were fixed by calibration runs (max
// observed stretch across the seeded test corpus times a safety margin) and
// are validated by the acceptance suite. c_global converts the user-facing
// stretch slack into the internal slack used by every sub-construction.

#include <cstdint>

#include "stspan/geom.hpp"

namespace stspan {

struct Calibration {
    double c1 = 2.0;   // slt_segment / slt_staircase source stretch
    double c2 = 4.0;   // combine_slt_pair
    double c3 = 6.0;   // combine_slt_square
    double c4 = 6.0;   // combine_slt_tame
    double c5 = 8.0;   // staircase_spanner
    double c6 = 12.0;  // tame_base_spanner
    double c7 = 12.0;  // tame_path_spanner
    double c8 = 14.0;  // fuzzy_staircase_spanner
};

struct SpannerConfig {
    double epsilon = 0.25;    // target stretch slack, in (0,1)
    double lambda = 8.0;      // Lambda >= 8
    double c_global = 16.0;   // internal eps' = epsilon / c_global
    Calibration calibration;
    double eta = kEtaRel;     // coincidence tolerance, relative to the frame
    std::uint64_t seed = 1;
    int threads = 0;          // 0: hardware concurrency

    double internal_eps() const { return epsilon / c_global; }

    void validate() const {
        if (!(epsilon > 0.0 && epsilon < 1.0)) throw OutOfRange("epsilon must be in (0,1)");
        if (!(lambda >= 8.0)) throw OutOfRange("lambda must be >= 8");
        if (!(c_global >= 1.0)) throw OutOfRange("c_global must be >= 1");
        if (!(eta > 0.0 && eta < 1e-3)) throw OutOfRange("eta out of range");
    }
};

}  // namespace stspan
