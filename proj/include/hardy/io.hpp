#pragma once

#include <filesystem>
#include <string>
#include <vector>

#include <json.hpp>

#include "hardy/bmo.hpp"
#include "hardy/decomposition.hpp"
#include "hardy/interpolation.hpp"
#include "hardy/singular.hpp"

namespace hardy {

/// Insertion-ordered, so dumps are byte-stable.
using Json = nlohmann::ordered_json;

inline constexpr const char* kReportSchema = "hardy-report/1";
inline constexpr const char* kFunctionSchema = "hardy-function/1";
inline constexpr const char* kCsvSchema = "hardy-csv/1";

/// Finite values as numbers, others as "inf", "-inf" or "nan".
Json number(double x);
double number_from(const Json& j);

Json to_json(const GroupPoint& p);
Json to_json(const CZSet& R);
Json to_json(const ComputationDomain& D);
Json to_json(const OscillationReport& r, bool with_sets = false);
Json to_json(const JNFit& fit);
Json to_json(const HormanderReport& r);
Json to_json(const AtomImageReport& r);
Json to_json(const StageCheck& c);
Json to_json(const AtomicExpansion& ex);
Json to_json(const LambdaDecomposition& dec);
Json to_json(const KFunctionalReport& r);

CZSet czset_from_json(const Json& j);
ComputationDomain domain_from_json(const Json& j);

/// Domain, nested split records (an empty array marks a leaf) and leaf values in depth-first order.
Json to_json(const PartitionFunction& f);
PartitionFunction partition_function_from_json(const Json& j);

/// Comma-separated table whose first line is "# schema: hardy-csv/1".
class CsvTable {
 public:
  explicit CsvTable(std::vector<std::string> columns);

  void add_row(const std::vector<double>& row);
  std::size_t rows() const { return rows_.size(); }
  std::string str() const;

 private:
  std::vector<std::string> columns_;
  std::vector<std::vector<double>> rows_;
};

/// Shortest round-tripping decimal form.
std::string format_double(double x);

void write_text(const std::filesystem::path& path, const std::string& content);

}  // namespace hardy
