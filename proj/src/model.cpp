#include "perturbench/model.hpp"

#include <fstream>
#include <map>
#include <sstream>
#include <stdexcept>

#include "perturbench/toy_classifier.hpp"
#include "perturbench/toy_ctc_model.hpp"

namespace perturbench {

const std::string DifferentiableModel::empty_;

namespace {

std::map<std::string, ModelFactory>& registry() {
  static std::map<std::string, ModelFactory> adapters;
  return adapters;
}

}  // namespace

void register_adapter(const std::string& arch, ModelFactory factory) {
  if (arch.empty()) throw std::invalid_argument("register_adapter: empty name");
  if (!factory) throw std::invalid_argument("register_adapter: null factory");
  auto [it, inserted] = registry().emplace(arch, std::move(factory));
  if (!inserted)
    throw std::invalid_argument("register_adapter: '" + arch + "' already registered");
}

bool adapter_registered(const std::string& arch) {
  return registry().count(arch) != 0;
}

std::unique_ptr<DifferentiableModel> load_model(const std::string& arch,
                                                const nlohmann::json& config) {
  ensure_builtin_adapters();
  const auto it = registry().find(arch);
  if (it == registry().end()) {
    std::ostringstream msg;
    msg << "load_model: unknown architecture '" << arch << "' (registered:";
    for (const auto& [name, factory] : registry()) msg << ' ' << name;
    msg << ')';
    throw std::invalid_argument(msg.str());
  }
  auto model = it->second(config);
  if (!model) throw std::runtime_error("load_model: factory for '" + arch + "' returned null");
  return model;
}

std::unique_ptr<DifferentiableModel> load_checkpoint(
    const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot open checkpoint: " + path.string());
  nlohmann::json j;
  try {
    in >> j;
  } catch (const nlohmann::json::exception& e) {
    throw std::runtime_error("malformed checkpoint " + path.string() + ": " + e.what());
  }
  if (!j.contains("arch"))
    throw std::runtime_error("checkpoint " + path.string() + " lacks an \"arch\" field");
  return load_model(j.at("arch").get<std::string>(), j);
}

void save_checkpoint(const DifferentiableModel& model,
                     const std::filesystem::path& path) {
  if (path.has_parent_path()) std::filesystem::create_directories(path.parent_path());
  std::ofstream out(path);
  if (!out) throw std::runtime_error("cannot write checkpoint: " + path.string());
  out << model.checkpoint().dump(2) << '\n';
  if (!out) throw std::runtime_error("short write on checkpoint: " + path.string());
}

void ensure_builtin_adapters() {
  ToyCtcModel::register_adapter();
  ToyClassifier::register_adapter();
}

}  // namespace perturbench
