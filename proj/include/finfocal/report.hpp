#pragma once

#include <string>

#include "finfocal/scenario.hpp"

namespace finfocal {

// RFC-4180 CSV writers; floats at 17 significant digits for byte-stable runs.
std::string focal_scan_csv(const Scenario& scenario, const FocalScanResult& scan);
std::string cut_scan_csv(const Scenario& scenario, const std::vector<CutRecord>& records);

Json focal_scan_summary(const Scenario& scenario, const FocalScanResult& scan);
Json cut_scan_summary(const Scenario& scenario, const std::vector<CutRecord>& records,
                      double closure_eps, double closure_fraction);

// 2D scene: N, focal images, cut images, a few geodesics. Deterministic.
std::string render_svg(const Scenario& scenario, const FocalScanResult* focal,
                       const std::vector<CutRecord>* cut);

void write_file(const std::string& path, const std::string& content);

}  // namespace finfocal
