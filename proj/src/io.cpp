#include "cfgreject/io.hpp"

#include <charconv>
#include <cmath>
#include <fstream>
#include <sstream>

namespace cfgreject {

using nlohmann::json;

std::string format_double(double value) {
  if (std::isnan(value)) return "nan";
  char buf[64];
  const auto [end, ec] = std::to_chars(buf, buf + sizeof(buf), value);
  if (ec != std::errc()) throw IoError("cannot format floating-point value");
  return std::string(buf, end);
}

std::string format_optional(const std::optional<double>& value) {
  return value ? format_double(*value) : std::string();
}

json mixture_to_json(const MixtureDistribution& dist) {
  json classes = json::array();
  for (const auto& cls : dist.classes()) {
    json components = json::array();
    for (const auto& c : cls.components) {
      components.push_back({
          {"weight", c.weight},
          {"mean", {c.mean.x, c.mean.y}},
          {"cov", {{c.covariance.xx, c.covariance.xy}, {c.covariance.yx, c.covariance.yy}}},
      });
    }
    classes.push_back({{"label", cls.label}, {"components", std::move(components)}});
  }
  return {{"classes", std::move(classes)}, {"priors", dist.priors()}};
}

MixtureDistribution mixture_from_json(const json& doc) {
  try {
    std::vector<ClassMixture> classes;
    for (const auto& cls : doc.at("classes")) {
      ClassMixture m;
      m.label = cls.at("label").get<ClassLabel>();
      for (const auto& c : cls.at("components")) {
        const auto& mean = c.at("mean");
        const auto& cov = c.at("cov");
        if (mean.size() != 2 || cov.size() != 2 || cov[0].size() != 2 || cov[1].size() != 2) {
          throw IoError("mixture component must have a 2-vector mean and a 2x2 cov");
        }
        m.components.push_back(GaussianComponent{
            c.at("weight").get<double>(),
            {mean[0].get<double>(), mean[1].get<double>()},
            {cov[0][0].get<double>(), cov[0][1].get<double>(), cov[1][0].get<double>(),
             cov[1][1].get<double>()},
        });
      }
      classes.push_back(std::move(m));
    }
    if (doc.contains("priors")) {
      return MixtureDistribution(std::move(classes), doc.at("priors").get<std::vector<double>>());
    }
    return MixtureDistribution(std::move(classes));
  } catch (const json::exception& e) {
    throw IoError(std::string("malformed mixture JSON: ") + e.what());
  }
}

void save_mixture(const MixtureDistribution& dist, const std::filesystem::path& path) {
  write_text_file(path, mixture_to_json(dist).dump(2) + "\n");
}

MixtureDistribution load_mixture(const std::filesystem::path& path) {
  return mixture_from_json(read_json_file(path));
}

json read_json_file(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw IoError("cannot open " + path.string());
  try {
    return json::parse(in);
  } catch (const json::parse_error& e) {
    throw IoError(path.string() + ": " + e.what());
  }
}

void write_text_file(const std::filesystem::path& path, std::string_view contents) {
  if (path.has_parent_path()) {
    std::error_code ec;
    std::filesystem::create_directories(path.parent_path(), ec);
    if (ec) throw IoError("cannot create directory " + path.parent_path().string());
  }
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw IoError("cannot write " + path.string());
  out << contents;
  if (!out) throw IoError("failed writing " + path.string());
}

std::size_t CsvTable::column(std::string_view name) const {
  for (std::size_t i = 0; i < header.size(); ++i) {
    if (header[i] == name) return i;
  }
  throw IoError("missing column '" + std::string(name) + "'");
}

namespace {

std::vector<std::string> split_line(const std::string& line) {
  std::vector<std::string> fields;
  std::string field;
  std::istringstream ss(line);
  while (std::getline(ss, field, ',')) fields.push_back(field);
  if (!line.empty() && line.back() == ',') fields.emplace_back();
  return fields;
}

}  // namespace

CsvTable read_csv(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw IoError("cannot open " + path.string());
  CsvTable table;
  std::string line;
  if (!std::getline(in, line)) throw IoError(path.string() + " is empty");
  table.header = split_line(line);
  std::size_t line_no = 1;
  while (std::getline(in, line)) {
    ++line_no;
    if (line.empty()) continue;
    auto fields = split_line(line);
    if (fields.size() != table.header.size()) {
      throw IoError(path.string() + ":" + std::to_string(line_no) + ": expected " +
                    std::to_string(table.header.size()) + " fields, got " +
                    std::to_string(fields.size()));
    }
    table.rows.push_back(std::move(fields));
  }
  return table;
}

}  // namespace cfgreject
