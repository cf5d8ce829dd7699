#pragma once

// Scenario configuration (sectioned key=value text files), trajectory
// persistence (text header + node-ordered float64 blocks), diagnostics
// report serialization, and the CLI driver entry points.

#include <fstream>
#include <list>
#include <map>
#include <memory>
#include <string>
#include <vector>

#include "poromem/diagnostics.hpp"
#include "poromem/verification.hpp"

namespace poromem {

struct MeshSpec {
    int nx = 16, ny = 16;
    double lx = 1.0, ly = 1.0;
    BoundarySpec boundary;
};

/// Nodal field initializer: "const:v" or "ramp:a,width" (value a scaled by
/// min(1, dist_to_Dirichlet/width), hence zero on the Dirichlet boundary).
struct FieldSpec {
    std::string kind = "const";  // "const" | "ramp"
    double value = 0.0;
    double width = 1.0;
};

struct ConvergenceSpec {
    std::vector<int> mesh_levels{24};
    std::vector<int> n_levels{16, 32, 64, 128};
    int reference_n = 1024;
};

struct Scenario {
    std::string name;
    MeshSpec mesh;
    bool manufactured = false;
    std::string manufactured_name;  // "smooth" | "constant"
    VanGenuchtenParams material;    // used when !manufactured
    FieldSpec p0, c0, th0;
    double p1 = -10.0;
    SchemeConfig scheme;
    DiagnosticsConfig diagnostics;
    ConvergenceSpec convergence;
};

/// Parses a scenario file. Material references resolve relative to the
/// scenario's directory, then to $POROMEM_CONFIG_DIR. Throws
/// std::runtime_error naming the offending section/key.
Scenario load_scenario(const std::string& path);

/// Parses a material parameter file ([van_genuchten] section) into params.
VanGenuchtenParams load_material_config(const std::string& path);

/// Resolves a possibly-relative config path: as given, then relative to
/// base_dir, then relative to $POROMEM_CONFIG_DIR. Throws if none exists.
std::string resolve_config_path(const std::string& path, const std::string& base_dir);

/// Fully instantiated scenario: mesh, validated model, validated initial
/// data, and (for manufactured cases) the volume sources.
struct ScenarioRuntime {
    Mesh mesh;
    MaterialModel model;
    InitialData init;
    ManufacturedCase mc;  // valid iff is_manufactured
    bool is_manufactured = false;
    const VolumeSources* sources() const { return is_manufactured ? &mc.sources : nullptr; }
};

/// Builds and validates everything; throws std::runtime_error naming the
/// violated assumption on validation failure.
ScenarioRuntime instantiate_scenario(const Scenario& sc);

std::vector<double> make_nodal_field(const FieldSpec& spec, const Mesh& mesh);

// --- Trajectory persistence (format documented in docs/formats.md) ---

/// Streams levels to a trajectory file. A begin() call rewrites the file
/// (h-halving restarts start over).
class TrajectoryFileWriter {
public:
    TrajectoryFileWriter(std::string path, int num_nodes);
    void begin(int n_levels, double h);
    void append(const StateFields& state);
    void close();
    LevelSink sink();

private:
    std::string path_;
    int num_nodes_;
    int declared_levels_ = 0;
    int written_ = 0;
    std::unique_ptr<std::ofstream> out_;
};

void write_trajectory(const std::string& path, const TrajectoryView& traj, int num_nodes);

/// Random-access file-backed trajectory with a small LRU level cache.
class FileTrajectory final : public TrajectoryView {
public:
    explicit FileTrajectory(const std::string& path, int cache_capacity = 32);
    int num_levels() const override { return n_levels_; }
    double step_size() const override { return h_; }
    const StateFields& level(int i) const override;
    int num_nodes() const { return num_nodes_; }

private:
    std::string path_;
    int num_nodes_ = 0, n_levels_ = 0;
    double h_ = 0.0;
    std::streamoff data_offset_ = 0;
    int capacity_;
    mutable std::map<int, StateFields> cache_;
    mutable std::list<int> lru_;
};

// --- Reports ---

/// Deterministic JSON serialization of the diagnostics report plus run
/// provenance (scenario name, levels, h, ell, bound trace).
std::string report_to_json(const DiagnosticsReport& rep, const std::string& scenario_name,
                           int n_levels, double h, double ell_used,
                           const PressureBoundResult& bound);

/// One "PASS"/"FAIL"/"INFO" line per audited invariant.
std::string report_summary(const DiagnosticsReport& rep);

void write_text_file(const std::string& path, const std::string& content);

// --- CLI drivers (exit code 0 = all checks pass, 1 = check failure,
// 2 = configuration/validation error) ---

int cli_run(const std::string& scenario_path, const std::string& out_dir, int n_override,
            bool streaming, int threads);
int cli_convergence(const std::string& scenario_path, const std::string& out_dir, int n_override,
                    int threads);
int cli_audit(const std::string& trajectory_path, const std::string& scenario_path,
              const std::string& out_dir);
int cli_validate_model(const std::string& scenario_path);
int cli_mesh_info(const std::string& scenario_path);

}  // namespace poromem
