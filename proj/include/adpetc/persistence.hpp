#pragma once

// JSON configuration and certificate documents, trace CSV and report export.

#include <cstdint>
#include <iosfwd>
#include <optional>
#include <string>

#include "adpetc/analysis.hpp"
#include "adpetc/etcsim.hpp"
#include "adpetc/lmidesign.hpp"
#include "adpetc/sysmodel.hpp"

namespace adpetc::io {

using num::Matrix;
using num::Vector;

inline constexpr int kConfigSchemaVersion = 1;
inline constexpr const char* kCertificateSchema = "adpetc-certificate/1";
inline constexpr const char* kTraceHeader = "# adpetc-trace/1";
inline constexpr const char* kReportSchema = "adpetc-report/1";

struct DisturbanceSpec {
    std::string kind = "zero";  // zero | windowed_sine | piecewise
    double amplitude = 0.0;
    double frequency = 0.0;
    double t_a = 0.0;
    double t_b = 0.0;
    Matrix samples;
    double dt = 0.0;
};

struct WorkbenchConfig {
    model::PlantModel plant;
    model::ControllerModel controller;
    Matrix c_bar;
    Matrix d_bar;

    double h = 0.0;
    double rho = 0.0;
    double gamma = 0.0;
    double mu = 0.0;
    Vector theta;
    double a_level = 0.0;
    double varrho_lo = 0.0;
    double varrho_hi = 0.0;
    std::size_t steps = design::kDefaultSteps;
    std::optional<double> eta_min;
    bool round_eta_min = true;
    std::size_t riccati_grid = riccati::kDefaultGrid;
    std::string search_mode = "bisection";

    double duration = 0.0;
    std::size_t substeps = sim::kDefaultSubsteps;
    bool record_flow = true;
    Vector xp0;
    Vector xc0;
    std::optional<Vector> y_hat0;  // defaults to Cp xp0
    std::optional<Vector> v_hat0;  // defaults to Dc Cp xp0

    DisturbanceSpec disturbance;
    std::optional<double> bound_w_inf;  // defaults to the disturbance sup norm
};

/// Throws ParseError on malformed documents or missing fields.
WorkbenchConfig parse_config(const std::string& text);
WorkbenchConfig load_config(const std::string& path);

/// Objects derived from a configuration.
struct Scenario {
    WorkbenchConfig config;
    model::AugmentedSystem aug;
    model::ThetaAllocation theta;
    sim::Disturbance disturbance;
    sim::SimState initial;  // eta is set by the simulator

    [[nodiscard]] design::DesignRequest design_request() const;
};

/// Validates dimensions (DimensionError / DomainError) and builds the scenario.
Scenario build_scenario(const WorkbenchConfig& cfg);

/// FNV-1a over the shapes and entries of every model matrix.
std::uint64_t model_hash(const model::AugmentedSystem& aug);

std::string certificate_to_json(const design::DesignCertificate& cert);
/// Throws ParseError.
design::DesignCertificate certificate_from_json(const std::string& text);
void save_certificate(const design::DesignCertificate& cert, const std::string& path);
design::DesignCertificate load_certificate(const std::string& path);

/// One row per trace row; V, W and z columns come from the analysis module.
void write_trace_csv(std::ostream& os, const sim::Trace& trace, const model::AugmentedSystem& aug,
                     const design::DesignCertificate& cert, const riccati::RiccatiSolution& ric);

std::string report_to_json(const analysis::PerformanceReport& perf,
                           const analysis::TransmissionStats& stats,
                           const design::DesignCertificate& cert);

void write_bits_histogram(std::ostream& os, const analysis::TransmissionStats& stats);

std::string read_file(const std::string& path);
void write_file(const std::string& path, const std::string& content);

}  // namespace adpetc::io
