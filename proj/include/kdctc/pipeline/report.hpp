// Copyright 2026 The kdctc Authors. All Rights Reserved.
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//     http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

#ifndef KDCTC_PIPELINE_REPORT_HPP
#define KDCTC_PIPELINE_REPORT_HPP

#include <cstdio>
#include <filesystem>
#include <set>
#include <sstream>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "kdctc/io/container.hpp"

namespace kdctc::pipeline {

namespace detail {

inline std::string fmt1(double v) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.1f", v);
  return buf;
}

inline std::vector<std::string> report_accents(const nlohmann::json& report) {
  return report.at("config").at("corpus").at("accents").get<std::vector<std::string>>();
}

}  // namespace detail

/// Markdown tables laid out like the alignment, adaptation and CER tables.
inline std::string render_markdown(const nlohmann::json& report) {
  std::ostringstream md;
  const auto accents = detail::report_accents(report);
  md << "# Experiment report (seed " << report["config"]["seed"].get<std::uint64_t>() << ")\n\n";

  md << "## Characters' spikes overlap with the teacher (%)\n\n";
  md << "| Student | Variant | Teacher | Train | Test |\n|---|---|---|---|---|\n";
  for (const auto& r : report["cso_table"]) {
    md << "| " << r["student"].get<std::string>() << " | " << r["variant"].get<std::string>() << " | "
       << r["teacher"].get<std::string>() << " | " << detail::fmt1(r["train"].get<double>()) << " | "
       << detail::fmt1(r["test"].get<double>()) << " |\n";
  }

  md << "\n## Adaptation CER (%)\n\n";
  std::set<std::string> variants;
  for (const auto& r : report["adaptation_table"])
    for (const auto& [k, v] : r["adapted"].items()) variants.insert(k);
  md << "| Accent | Base model | Unadapted |";
  for (const auto& v : variants) md << ' ' << v << " |";
  md << "\n|---|---|---|";
  for (std::size_t i = 0; i < variants.size(); ++i) md << "---|";
  md << '\n';
  for (const auto& r : report["adaptation_table"]) {
    md << "| " << r["accent"].get<std::string>() << " | " << r["base_model"].get<std::string>() << " | "
       << detail::fmt1(r["unadapted"].get<double>()) << " |";
    for (const auto& v : variants) {
      md << ' ' << (r["adapted"].contains(v) ? detail::fmt1(r["adapted"][v].get<double>()) : "-") << " |";
    }
    md << '\n';
  }

  md << "\n## Test CER (%)\n\n| Model | Teacher Model |";
  for (const auto& a : accents) md << ' ' << a << " |";
  md << " Ave |\n|---|---|";
  for (std::size_t i = 0; i <= accents.size(); ++i) md << "---|";
  md << '\n';
  for (const auto& r : report["cer_table"]) {
    md << "| " << r["model"].get<std::string>() << " | " << r["teacher"].get<std::string>() << " |";
    for (const auto& a : accents) {
      md << ' ' << (r["per_accent"].contains(a) ? detail::fmt1(r["per_accent"][a].get<double>()) : "-")
         << " |";
    }
    md << ' ' << detail::fmt1(r["ave"].get<double>()) << " |\n";
  }

  const auto& s = report["summary"];
  if (s.contains("relative_gain_pct")) {
    md << "\nRelative CER gain of " << s["best"].get<std::string>() << " over "
       << s["baseline"].get<std::string>() << ": " << detail::fmt1(s["relative_gain_pct"].get<double>())
       << "% (reference value " << detail::fmt1(s["reference_relative_gain_pct"].get<double>())
       << "%).\n";
  }
  return md.str();
}

/// Writes report.md, cer.csv, cso.csv and adaptation.csv into `dir`.
inline void render_report(const nlohmann::json& report, const std::filesystem::path& dir) {
  const auto accents = detail::report_accents(report);
  io::write_bytes(dir / "report.md", render_markdown(report));

  std::ostringstream cer;
  cer << "model,teacher";
  for (const auto& a : accents) cer << ',' << a;
  cer << ",ave\n";
  for (const auto& r : report["cer_table"]) {
    cer << r["model"].get<std::string>() << ',' << r["teacher"].get<std::string>();
    for (const auto& a : accents) {
      cer << ',';
      if (r["per_accent"].contains(a)) cer << r["per_accent"][a].get<double>();
    }
    cer << ',' << r["ave"].get<double>() << '\n';
  }
  io::write_bytes(dir / "cer.csv", cer.str());

  std::ostringstream cso;
  cso << "student,variant,teacher,train,test\n";
  for (const auto& r : report["cso_table"]) {
    cso << r["student"].get<std::string>() << ',' << r["variant"].get<std::string>() << ','
        << r["teacher"].get<std::string>() << ',' << r["train"].get<double>() << ','
        << r["test"].get<double>() << '\n';
  }
  io::write_bytes(dir / "cso.csv", cso.str());

  std::ostringstream ad;
  ad << "accent,base_model,unadapted,variant,reference,adapted\n";
  for (const auto& r : report["adaptation_table"]) {
    for (const auto& [k, v] : r["adapted"].items()) {
      ad << r["accent"].get<std::string>() << ',' << r["base_model"].get<std::string>() << ','
         << r["unadapted"].get<double>() << ',' << k << ',' << r["reference"][k].get<std::string>()
         << ',' << v.get<double>() << '\n';
    }
  }
  io::write_bytes(dir / "adaptation.csv", ad.str());
}

}  // namespace kdctc::pipeline

#endif  // KDCTC_PIPELINE_REPORT_HPP
