#pragma once

#include <memory>
#include <string>

#include <json.hpp>

#include "finfocal/oracle.hpp"
#include "finfocal/scan.hpp"

namespace finfocal {

using Json = nlohmann::json;

// A scenario binds a metric, a submanifold, a ray grid and tolerances. Built
// once from a validated config file; everything downstream reads it const.
class Scenario {
 public:
  static Scenario from_file(const std::string& path);
  static Scenario from_json(const Json& j, const std::string& source_name = "inline");

  const std::string& name() const { return name_; }
  const std::string& hash() const { return hash_; }
  unsigned seed() const { return seed_; }

  const GeodesicSystem& system() const { return *system_; }
  const NormalBundle& bundle() const { return *bundle_; }
  const RayGrid& grid() const { return *grid_; }

  FocalScanSettings focal_settings(int threads) const;
  CutSettings cut_settings(int threads) const;
  bool has_oracle() const { return has_oracle_; }
  GridOracleSettings oracle_settings() const;

  double t_max() const { return t_max_; }
  int rays() const { return rays_; }
  Json summary_header(const std::string& command) const;

  // structural validation against the published schema subset
  static void validate_config(const Json& config);
  static void validate_summary(const Json& summary);
  static const char* scenario_schema_text();
  static const char* summary_schema_text();

 private:
  std::string name_, hash_;
  unsigned seed_ = 0;
  int rays_ = 0;
  double t_max_ = 0.0;
  int max_focal_index_ = 2;
  double integrator_tol_ = 1e-10;
  double focal_time_tol_ = 1e-9;
  double rank_tol_ = 1e-7;
  double cut_report_tol_ = 1e-3;
  double cut_predicate_tol_ = 2.5e-4;
  bool has_oracle_ = false;
  GridOracleSettings oracle_;

  std::shared_ptr<GeodesicSystem> system_;
  std::shared_ptr<NormalBundle> bundle_;
  std::shared_ptr<RayGrid> grid_;
};

// minimal structural JSON-schema checker (type / required / properties /
// items / enum); enough to pin the published formats
void check_schema(const Json& value, const Json& schema, const std::string& where);

}  // namespace finfocal
