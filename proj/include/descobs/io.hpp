#pragma once

#include <string>

#include <json.hpp>

#include "descobs/detect.hpp"
#include "descobs/observer.hpp"
#include "descobs/sim.hpp"
#include "descobs/system.hpp"

namespace descobs {

using json = nlohmann::json;

/// Malformed or inconsistent input files.
class InputError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

/// Rounds to 12 significant digits so that files are stable across runs.
double round12(double v);

json matrix_to_json(const Mat& M);
/// Row-major nested arrays; `[]` is read as rows x 0 when rows > 0 is given, else 0 x cols.
Mat matrix_from_json(const json& j, const std::string& name, Index rows = -1, Index cols = -1);

json read_json_file(const std::string& path);
void write_json_file(const std::string& path, const json& j);

/// Keys E, A, K required; B, C and D optional; optional "n" and "description".
DescriptorSystem system_from_json(const json& j);
json system_to_json(const DescriptorSystem& sys);
DescriptorSystem load_system(const std::string& path);

/// A system already in observer coordinates (key "reduced": true).
bool is_reduced_json(const json& j);
ReducedSystem reduced_from_json(const json& j, const Tolerances& tol = {});
json reduced_to_json(const ReducedSystem& red);

json observer_to_json(const ObserverRealization& obs, const SynthesisReport* rep = nullptr);
ObserverRealization observer_from_json(const json& j);

Signal signal_from_json(const json& j);
json signal_to_json(const Signal& sig);

json certificate_to_json(const DetectabilityCertificate& c);
json qkf_to_json(const QkfDecomposition& q, bool with_matrices);

}  // namespace descobs
