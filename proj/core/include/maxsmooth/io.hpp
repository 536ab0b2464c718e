#pragma once

#include "maxsmooth/latent_model.hpp"
#include "maxsmooth/mesh.hpp"
#include "maxsmooth/site_ml.hpp"

#include <iosfwd>
#include <map>
#include <string>
#include <vector>

namespace maxsmooth {

/// Header-named delimited text. The delimiter is a tab when the header holds
/// one, a comma otherwise. Blank lines and lines starting with '#' are skipped.
struct TextTable {
  std::vector<std::string> header;
  std::vector<std::vector<std::string>> rows;
  std::vector<int> lines;  // 1-based source line of each row
  std::vector<std::string> comments;
  char delimiter = ',';

  [[nodiscard]] int column(const std::string& name) const;  // -1 when absent
};

TextTable parse_table(std::istream& is, const std::string& source);

/// Shortest decimal text that reads back to the same double.
std::string format_double(double v);
double parse_double(const std::string& s, const std::string& where);
int parse_int(const std::string& s, const std::string& where);

/// station,year,amax[,pooling_ok]. Rows with pooling_ok false are dropped.
/// Stations keep their order of first appearance; years are sorted.
/// DataError (with the line number) on malformed rows or duplicate (station, year).
std::vector<SiteData> parse_maxima(std::istream& is, const std::string& source);
std::vector<SiteData> load_maxima(const std::string& path);
void write_maxima(std::ostream& os, const std::vector<SiteData>& sites);

/// Raw catchment descriptors with coordinates: station,x,y,<descriptor columns>.
struct DescriptorTable {
  std::vector<std::string> site_ids;
  std::vector<Point2> coords;
  std::vector<std::string> names;
  Eigen::MatrixXd values;

  [[nodiscard]] int row(const std::string& site_id) const;  // -1 when absent
  /// Range checks: AREA > 0, FARL in (0, 1], URBEXT >= 0, BFIHOST in (0, 1).
  void validate() const;
  [[nodiscard]] DescriptorTable select(const std::vector<std::string>& site_ids) const;
};

DescriptorTable parse_descriptors(std::istream& is, const std::string& source);
DescriptorTable load_descriptors(const std::string& path);
void write_descriptors(std::ostream& os, const DescriptorTable& t);

/// log by default; BFIHOST squared; log(URBEXT + 1); ASPBAR / 100.
double transform_descriptor(const std::string& name, double raw);
/// Transformed (not standardized) columns; `columns` empty means all.
CovariateTable transform_descriptors(const DescriptorTable& t, const std::vector<std::string>& columns = {});

void write_site_fits(std::ostream& os, const std::vector<SiteFit>& fits);
std::vector<SiteFit> parse_site_fits(std::istream& is, const std::string& source);

/// One draw per row with named columns; provenance in '# key=value' lines.
void write_draws(std::ostream& os, const PosteriorDraws& d, const std::map<std::string, std::string>& meta = {});
PosteriorDraws parse_draws(std::istream& is, const std::string& source,
                           std::map<std::string, std::string>* meta = nullptr);

void write_standardizer(std::ostream& os, const Standardizer& s);
Standardizer parse_standardizer(std::istream& is, const std::string& source);

std::string read_file(const std::string& path);
/// Writes to a temporary sibling and renames it over `path`.
void write_file_atomic(const std::string& path, const std::string& content);

}  // namespace maxsmooth
