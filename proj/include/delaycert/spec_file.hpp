#pragma once

// JSON system description used by the command-line tool.
//
//   {
//     "version": 1,
//     "kind": "linear-single" | "linear-multiple" | "linear-distributed" | "nonlinear-delay" | "ode",
//     "n": 2,
//     "delays": [1.0],
//     "matrices": {"A0": [[0, 1], [-2, 0.1]], "A1": [[0, 0], ["-a", 0]]},
//     "distributed_kernel": [[[[0, 1.5], [2, -1]], ...], ...],   // entry = [[power of theta, coef], ...]
//     "rhs": ["-x1^3 + 0.9*x1_d1^3"],                              // or [[{"x1": 3}, -1], ...] per entry
//     "parameters": [{"name": "tau", "box": [0.2, 1.6]}],
//     "tau_param": "tau",
//     "state_region": ["1 - x1^2"],
//     "builder": "auto" | "delay-independent",
//     "degree": {"d": 4, "d_theta": 4, "d_param": 2}
//   }
//
// Matrix entries and polynomial strings may name declared parameters. State symbols
// are x1..xn for x(t) and x1_d1.. for x(t - tau_k).

#include <string>

#include "delaycert/stability.hpp"
#include "delaycert/system.hpp"

namespace delaycert {

struct SpecFile {
    SystemSpec spec;
    std::string builder = "auto";
    int degree = 2;
    int degree_theta = -1;  // -1: same as degree
    int degree_param = 2;
};

/// Throws std::invalid_argument; JSON syntax errors carry "line L, column C".
SpecFile parse_spec_file(const std::string& text);
SpecFile load_spec_file(const std::string& path);

/// Builder named by the file (or the default for its kind) at degree d.
stability::Build build_from(const SpecFile& file, int d);

}  // namespace delaycert
