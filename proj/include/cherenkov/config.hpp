#pragma once

#include <cstdint>
#include <stdexcept>
#include <string>
#include <vector>

#include "cherenkov/dynamics.hpp"
#include "cherenkov/field.hpp"
#include "cherenkov/friction.hpp"
#include "cherenkov/kernels.hpp"
#include "cherenkov/model.hpp"

namespace cherenkov {

struct ConfigError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

struct FrictionSection {
    std::vector<double> p_values; // default: 0.5, 0.9, 1, nine log-spaced points in p - 1 on [1e-3, 1e-1], 1.5, 2, 5
    std::string method = "delta"; // delta | eps | both
};

struct KernelSection {
    std::string regime = "generic"; // generic: constant Q1, Q2; near_sonic: Q1 = Q2 with |Q2| = 1 + 10 tau^(-2/3)
    double tau_min = 10.0;
    double tau_max = 1000.0;
    int tau_points = 16;
    Vec3 Q1{2, 0, 0};
    Vec3 Q2{2, 0, 0}; // near_sonic keeps only its direction
    std::string method = "automatic"; // automatic | contour | regularized
    double gamma = kPi / 12;
    bool rotate = false; // apply one seeded random rotation to the whole family
};

struct EffectiveSection {
    double horizon = 1e6;
    int samples = 400;
    double tail_decades = 2.0; // fit window is [horizon 10^-tail_decades, horizon]
};

struct WaveSection {
    bool compare = true; // also run [run] and record the distance to the wave
};

struct SweepSection {
    std::string parameter; // section.key
    std::vector<std::string> values;
    std::string command = "simulate";
};

struct OutputSection {
    std::string dir = "results";
    std::vector<std::string> formats{"csv", "json"};
    int snapshot_every = 0; // records between field snapshots, 0 = final only
};

struct ExperimentConfig {
    PhysicalParams params;
    PotentialSpec spec = PotentialSpec::gaussian(1.0);
    GridSpec grid;
    InitialConditions ic;
    RunOptions run;
    std::uint64_t seed = 1;
    int threads = 1;
    FrictionSection friction;
    KernelSection kernel;
    EffectiveSection effective;
    WaveSection wave;
    SweepSection sweep;
    OutputSection output;
};

ExperimentConfig default_config();
ExperimentConfig parse_config(const std::string& text);
ExperimentConfig load_config(const std::string& path);
// every key, fixed order, shortest round-trip numbers
std::string serialize_config(const ExperimentConfig& cfg);
// sha256 of the serialized form without [output], first 16 hex digits
std::string config_id(const ExperimentConfig& cfg);
// "section.key" = value with the same parsing as a config file
void set_config_value(ExperimentConfig& cfg, const std::string& dotted, const std::string& value);
std::vector<std::string> config_keys();
void validate_config(const ExperimentConfig& cfg);

std::string sha256_hex(const std::string& data);

} // namespace cherenkov
