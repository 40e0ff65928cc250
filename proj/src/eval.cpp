#include "ssgan/eval.hpp"

#include <cstdio>
#include <fstream>
#include <iomanip>
#include <sstream>

#include <json.hpp>

namespace ssgan {

CmcCurve cmc_curve(const std::vector<std::vector<int>>& rankings,
                   const std::vector<int>& labels) {
  check(rankings.size() == labels.size(), Error::Kind::value, "cmc_curve: ", rankings.size(),
        " rankings vs ", labels.size(), " labels");
  check(!rankings.empty(), Error::Kind::value, "cmc_curve: empty input");
  const std::size_t k = rankings.front().size();
  std::vector<std::size_t> hits(k, 0);
  for (std::size_t i = 0; i < rankings.size(); ++i) {
    check(rankings[i].size() == k, Error::Kind::value, "cmc_curve: ragged rankings");
    check(labels[i] >= 1 && static_cast<std::size_t>(labels[i]) <= k, Error::Kind::value,
          "cmc_curve: label ", labels[i], " outside 1..", k);
    for (std::size_t r = 0; r < k; ++r) {
      if (rankings[i][r] == labels[i]) {
        ++hits[r];
        break;
      }
    }
  }
  CmcCurve curve;
  curve.accuracy.resize(k);
  std::size_t cumulative = 0;
  for (std::size_t r = 0; r < k; ++r) {
    cumulative += hits[r];
    curve.accuracy[r] = static_cast<double>(cumulative) / static_cast<double>(labels.size());
  }
  return curve;
}

namespace {

std::string fmt(double v, const char* spec = "%.17g") {
  char buf[64];
  std::snprintf(buf, sizeof(buf), spec, v);
  return buf;
}

void write_csv(const EvalReport& r, std::ostream& out) {
  out << "# top1=" << fmt(r.top1, "%.2f") << ",top5=" << fmt(r.top5, "%.2f")
      << ",top10=" << fmt(r.top10, "%.2f") << "\n";
  out << "# samples=" << r.sample_count << "\n";
  out << "# model=" << r.model_id << "\n";
  out << "# per_class=";
  for (std::size_t c = 0; c < r.per_class.size(); ++c) {
    if (c) out << ";";
    out << (c + 1) << ":" << fmt(r.per_class[c]);
  }
  out << "\n";
  out << "rank,accuracy\n";
  for (std::size_t i = 0; i < r.cmc.accuracy.size(); ++i)
    out << (i + 1) << "," << fmt(r.cmc.accuracy[i]) << "\n";
}

void write_json(const EvalReport& r, std::ostream& out) {
  nlohmann::json j{{"top1", r.top1},
                   {"top5", r.top5},
                   {"top10", r.top10},
                   {"cmc", r.cmc.accuracy},
                   {"per_class", r.per_class},
                   {"samples", r.sample_count},
                   {"model", r.model_id}};
  out << j.dump(2) << "\n";
}

void write_table(const EvalReport& r, std::ostream& out) {
  out << "+----------------------+--------+--------+--------+\n";
  out << "| Network/Features     | Top-1  | Top-5  | Top-10 |\n";
  out << "+----------------------+--------+--------+--------+\n";
  char row[128];
  std::snprintf(row, sizeof(row), "| %-20s | %6.2f | %6.2f | %6.2f |\n",
                r.model_id.substr(0, 20).c_str(), r.top1, r.top5, r.top10);
  out << row;
  out << "+----------------------+--------+--------+--------+\n";
  out << "rank-" << r.num_classes() << " accuracy 1.00 over " << r.sample_count
      << " test samples\n";
}

}  // namespace

void write_report(const EvalReport& report, const std::filesystem::path& path,
                  ReportFormat format) {
  std::ofstream out(path);
  check(out.good(), Error::Kind::io, "cannot write report ", path.string());
  switch (format) {
    case ReportFormat::csv: write_csv(report, out); break;
    case ReportFormat::json: write_json(report, out); break;
    case ReportFormat::text_table: write_table(report, out); break;
  }
  out.flush();
  check(out.good(), Error::Kind::io, "report write failed: ", path.string());
}

EvalReport parse_report_csv(const std::filesystem::path& path) {
  std::ifstream in(path);
  check(in.good(), Error::Kind::io, "cannot read report ", path.string());
  EvalReport r;
  std::string line;
  bool header_seen = false;
  while (std::getline(in, line)) {
    if (line.empty()) continue;
    if (line.rfind("# samples=", 0) == 0) {
      r.sample_count = std::stoull(line.substr(10));
    } else if (line.rfind("# model=", 0) == 0) {
      r.model_id = line.substr(8);
    } else if (line.rfind("# per_class=", 0) == 0) {
      std::stringstream ss(line.substr(12));
      std::string item;
      while (std::getline(ss, item, ';')) {
        const auto colon = item.find(':');
        check(colon != std::string::npos, Error::Kind::parse, "bad per_class entry: ", item);
        r.per_class.push_back(std::stod(item.substr(colon + 1)));
      }
    } else if (line[0] == '#') {
      continue;  // top-k summary line; recomputed from the curve below
    } else if (line == "rank,accuracy") {
      header_seen = true;
    } else {
      check(header_seen, Error::Kind::parse, "data row before header in ", path.string());
      const auto comma = line.find(',');
      check(comma != std::string::npos, Error::Kind::parse, "bad csv row: ", line);
      const std::size_t rank = std::stoull(line.substr(0, comma));
      check(rank == r.cmc.accuracy.size() + 1, Error::Kind::parse,
            "rank column must run 1..k without gaps, got ", rank);
      r.cmc.accuracy.push_back(std::stod(line.substr(comma + 1)));
    }
  }
  check(!r.cmc.accuracy.empty(), Error::Kind::parse, "no CMC rows in ", path.string());
  r.top1 = r.cmc.at_rank(1) * 100.0;
  r.top5 = r.cmc.at_rank(5) * 100.0;
  r.top10 = r.cmc.at_rank(10) * 100.0;
  return r;
}

}  // namespace ssgan
