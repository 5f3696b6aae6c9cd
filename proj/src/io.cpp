#include "occlureg/io.hpp"

#include <cctype>
#include <charconv>
#include <cstring>
#include <fstream>
#include <sstream>

#include "json.hpp"

namespace occlureg {

using nlohmann::json;

std::string format_double(double value) {
  char buf[32];
  auto res = std::to_chars(buf, buf + sizeof(buf), value);
  return std::string(buf, res.ptr);
}

namespace {

std::ofstream open_out(const std::string& path, bool binary = false) {
  std::ofstream out(path, binary ? std::ios::binary : std::ios::out);
  if (!out) throw IoError("cannot open " + path + " for writing");
  return out;
}

std::ifstream open_in(const std::string& path, bool binary = false) {
  std::ifstream in(path, binary ? std::ios::binary : std::ios::in);
  if (!in) throw IoError("cannot open " + path);
  return in;
}

void finish(std::ofstream& out, const std::string& path) {
  out.flush();
  if (!out) throw IoError("write failed for " + path);
}

std::vector<std::string> split_tokens(const std::string& line) {
  std::istringstream ss(line);
  std::vector<std::string> tokens;
  std::string t;
  while (ss >> t) tokens.push_back(t);
  return tokens;
}

double parse_double(const std::string& token, const std::string& path, long line_no) {
  double v = 0.0;
  auto res = std::from_chars(token.data(), token.data() + token.size(), v);
  if (res.ec != std::errc() || res.ptr != token.data() + token.size())
    throw ParseError(path, line_no, "expected a number, got '" + token + "'");
  return v;
}

json parse_json(const std::string& text, const std::string& path) {
  json j = json::parse(text, nullptr, false);
  if (j.is_discarded()) throw ParseError(path, 1, "invalid JSON");
  return j;
}

json load_json_file(const std::string& path) {
  std::ifstream in = open_in(path);
  std::stringstream buf;
  buf << in.rdbuf();
  return parse_json(buf.str(), path);
}

void save_json_file(const std::string& path, const json& j) {
  std::ofstream out = open_out(path);
  out << j.dump(2) << "\n";
  finish(out, path);
}

json pose_to_json(const RigidTransform& t) {
  json arr = json::array();
  const Mat4 m = t.matrix();
  for (int r = 0; r < 4; ++r)
    for (int c = 0; c < 4; ++c) arr.push_back(m(r, c));
  return arr;
}

RigidTransform pose_from_json(const json& arr, const std::string& path) {
  if (!arr.is_array() || arr.size() != 16)
    throw ParseError(path, 1, "pose must be a 16-element row-major array");
  Mat4 m;
  for (int r = 0; r < 4; ++r)
    for (int c = 0; c < 4; ++c) m(r, c) = arr[static_cast<std::size_t>(4 * r + c)];
  RigidTransform t;
  t.matrix() = m;
  return t;
}

json intrinsics_to_json(const CameraIntrinsics& intr) {
  return json{{"fx", intr.fx},       {"fy", intr.fy},     {"cx", intr.cx},
              {"cy", intr.cy},       {"width", intr.width}, {"height", intr.height}};
}

CameraIntrinsics intrinsics_from_json(const json& j, const std::string& path) {
  CameraIntrinsics intr;
  try {
    intr.fx = j.at("fx");
    intr.fy = j.at("fy");
    intr.cx = j.at("cx");
    intr.cy = j.at("cy");
    intr.width = j.at("width");
    intr.height = j.at("height");
  } catch (const json::exception& e) {
    throw ParseError(path, 1, std::string("bad intrinsics: ") + e.what());
  }
  if (!intr.valid()) throw ParseError(path, 1, "intrinsics fail validation");
  return intr;
}

}  // namespace

void save_ply(const std::string& path, const PointCloud& cloud) {
  std::ofstream out = open_out(path);
  const bool normals = cloud.has_normals();
  out << "ply\nformat ascii 1.0\nelement vertex " << cloud.size() << "\n"
      << "property double x\nproperty double y\nproperty double z\n";
  if (normals)
    out << "property double nx\nproperty double ny\nproperty double nz\n";
  out << "end_header\n";
  for (Eigen::Index i = 0; i < cloud.size(); ++i) {
    out << format_double(cloud.points(i, 0)) << ' ' << format_double(cloud.points(i, 1))
        << ' ' << format_double(cloud.points(i, 2));
    if (normals)
      out << ' ' << format_double(cloud.normals(i, 0)) << ' '
          << format_double(cloud.normals(i, 1)) << ' '
          << format_double(cloud.normals(i, 2));
    out << '\n';
  }
  finish(out, path);
}

PointCloud load_ply(const std::string& path) {
  std::ifstream in = open_in(path);
  long line_no = 0;
  std::string line;
  auto next = [&]() {
    if (!std::getline(in, line)) throw ParseError(path, line_no, "unexpected end of file");
    ++line_no;
  };

  next();
  if (split_tokens(line) != std::vector<std::string>{"ply"})
    throw ParseError(path, line_no, "missing ply magic");

  struct Element {
    std::string name;
    long count = 0;
    std::vector<std::string> properties;  // scalar property names, in order
  };
  std::vector<Element> elements;
  bool ascii = false;
  while (true) {
    next();
    auto tok = split_tokens(line);
    if (tok.empty() || tok[0] == "comment") continue;
    if (tok[0] == "format") {
      if (tok.size() < 2 || tok[1] != "ascii")
        throw ParseError(path, line_no, "only ascii PLY is supported");
      ascii = true;
    } else if (tok[0] == "element") {
      if (tok.size() != 3) throw ParseError(path, line_no, "malformed element line");
      elements.push_back({tok[1], std::stol(tok[2]), {}});
    } else if (tok[0] == "property") {
      if (elements.empty())
        throw ParseError(path, line_no, "property before any element");
      if (tok.size() >= 2 && tok[1] == "list") {
        if (elements.back().name == "vertex")
          throw ParseError(path, line_no, "list property not supported on vertices");
        elements.back().properties.push_back("<list>");
      } else {
        if (tok.size() != 3) throw ParseError(path, line_no, "malformed property line");
        elements.back().properties.push_back(tok[2]);
      }
    } else if (tok[0] == "end_header") {
      break;
    } else {
      throw ParseError(path, line_no, "unknown header keyword '" + tok[0] + "'");
    }
  }
  if (!ascii) throw ParseError(path, line_no, "missing format line");

  PointCloud cloud;
  for (const Element& el : elements) {
    if (el.name != "vertex") {
      for (long i = 0; i < el.count; ++i) next();  // skip foreign element rows
      continue;
    }
    auto column = [&](const std::string& name) {
      for (std::size_t c = 0; c < el.properties.size(); ++c)
        if (el.properties[c] == name) return static_cast<int>(c);
      return -1;
    };
    const int cx = column("x"), cy = column("y"), cz = column("z");
    if (cx < 0 || cy < 0 || cz < 0)
      throw ParseError(path, line_no, "vertex element lacks x/y/z properties");
    const int nx = column("nx"), ny = column("ny"), nz = column("nz");
    const bool normals = nx >= 0 && ny >= 0 && nz >= 0;

    cloud.points.resize(el.count, 3);
    if (normals) cloud.normals.resize(el.count, 3);
    for (long i = 0; i < el.count; ++i) {
      next();
      auto tok = split_tokens(line);
      if (tok.size() < el.properties.size())
        throw ParseError(path, line_no, "vertex row has too few values");
      auto get = [&](int c) { return parse_double(tok[static_cast<std::size_t>(c)], path, line_no); };
      cloud.points.row(i) << get(cx), get(cy), get(cz);
      if (normals) cloud.normals.row(i) << get(nx), get(ny), get(nz);
    }
  }
  return cloud;
}

void save_xyz(const std::string& path, const PointCloud& cloud) {
  std::ofstream out = open_out(path);
  const bool normals = cloud.has_normals();
  for (Eigen::Index i = 0; i < cloud.size(); ++i) {
    out << format_double(cloud.points(i, 0)) << ' ' << format_double(cloud.points(i, 1))
        << ' ' << format_double(cloud.points(i, 2));
    if (normals)
      out << ' ' << format_double(cloud.normals(i, 0)) << ' '
          << format_double(cloud.normals(i, 1)) << ' '
          << format_double(cloud.normals(i, 2));
    out << '\n';
  }
  finish(out, path);
}

PointCloud load_xyz(const std::string& path) {
  std::ifstream in = open_in(path);
  std::vector<std::array<double, 6>> rows;
  std::size_t columns = 0;
  std::string line;
  long line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (auto pos = line.find('#'); pos != std::string::npos) line.erase(pos);
    auto tok = split_tokens(line);
    if (tok.empty()) continue;
    if (tok.size() != 3 && tok.size() != 6)
      throw ParseError(path, line_no, "expected 3 or 6 columns");
    if (columns == 0) columns = tok.size();
    if (tok.size() != columns)
      throw ParseError(path, line_no, "inconsistent column count");
    std::array<double, 6> row{};
    for (std::size_t c = 0; c < tok.size(); ++c)
      row[c] = parse_double(tok[c], path, line_no);
    rows.push_back(row);
  }
  PointCloud cloud;
  cloud.points.resize(static_cast<Eigen::Index>(rows.size()), 3);
  if (columns == 6) cloud.normals.resize(static_cast<Eigen::Index>(rows.size()), 3);
  for (std::size_t i = 0; i < rows.size(); ++i) {
    const auto idx = static_cast<Eigen::Index>(i);
    cloud.points.row(idx) << rows[i][0], rows[i][1], rows[i][2];
    if (columns == 6) cloud.normals.row(idx) << rows[i][3], rows[i][4], rows[i][5];
  }
  return cloud;
}

PointCloud load_cloud(const std::string& path) {
  auto dot = path.rfind('.');
  std::string ext = dot == std::string::npos ? "" : path.substr(dot + 1);
  for (char& c : ext) c = static_cast<char>(std::tolower(static_cast<unsigned char>(c)));
  if (ext == "ply") return load_ply(path);
  if (ext == "xyz" || ext == "txt") return load_xyz(path);
  throw IoError("unsupported cloud format: " + path);
}

namespace {

template <typename Storage>
void save_matrix(const std::string& path, const MatX& mat) {
  std::ofstream out = open_out(path, true);
  json header{{"schema", 1},
              {"rows", mat.rows()},
              {"dim", mat.cols()}};
  out << header.dump() << "\n";
  std::vector<Storage> row(static_cast<std::size_t>(mat.cols()));
  for (Eigen::Index i = 0; i < mat.rows(); ++i) {
    for (Eigen::Index j = 0; j < mat.cols(); ++j)
      row[static_cast<std::size_t>(j)] = static_cast<Storage>(mat(i, j));
    out.write(reinterpret_cast<const char*>(row.data()),
              static_cast<std::streamsize>(row.size() * sizeof(Storage)));
  }
  finish(out, path);
}

template <typename Storage>
MatX load_matrix(const std::string& path) {
  std::ifstream in = open_in(path, true);
  std::string header_line;
  if (!std::getline(in, header_line)) throw ParseError(path, 1, "missing header");
  json header = parse_json(header_line, path);
  long rows = 0, dim = 0;
  try {
    if (header.at("schema").get<int>() != 1)
      throw ParseError(path, 1, "unsupported schema");
    rows = header.at("rows");
    dim = header.at("dim");
  } catch (const json::exception& e) {
    throw ParseError(path, 1, std::string("bad matrix header: ") + e.what());
  }
  if (rows < 0 || dim < 0) throw ParseError(path, 1, "negative dimensions");

  MatX mat(rows, dim);
  std::vector<Storage> row(static_cast<std::size_t>(dim));
  for (long i = 0; i < rows; ++i) {
    in.read(reinterpret_cast<char*>(row.data()),
            static_cast<std::streamsize>(row.size() * sizeof(Storage)));
    if (!in) throw IoError("truncated matrix data in " + path);
    for (long j = 0; j < dim; ++j)
      mat(i, j) = static_cast<double>(row[static_cast<std::size_t>(j)]);
  }
  return mat;
}

}  // namespace

void save_matrix_f32(const std::string& path, const MatX& mat) {
  save_matrix<float>(path, mat);
}
MatX load_matrix_f32(const std::string& path) { return load_matrix<float>(path); }
void save_matrix_f64(const std::string& path, const MatX& mat) {
  save_matrix<double>(path, mat);
}
MatX load_matrix_f64(const std::string& path) { return load_matrix<double>(path); }

void save_pbm(const std::string& path, const MaskImage& mask) {
  std::ofstream out = open_out(path, true);
  out << "P4\n" << mask.width << " " << mask.height << "\n";
  const int stride = (mask.width + 7) / 8;
  std::vector<unsigned char> row(static_cast<std::size_t>(stride));
  for (int v = 0; v < mask.height; ++v) {
    std::fill(row.begin(), row.end(), 0);
    for (int u = 0; u < mask.width; ++u)
      if (mask.at(u, v)) row[static_cast<std::size_t>(u / 8)] |= 0x80 >> (u % 8);
    out.write(reinterpret_cast<const char*>(row.data()), stride);
  }
  finish(out, path);
}

MaskImage load_pbm(const std::string& path) {
  std::ifstream in = open_in(path, true);
  std::string data((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());
  std::size_t pos = 0;
  auto token = [&]() -> std::string {
    while (pos < data.size()) {
      if (std::isspace(static_cast<unsigned char>(data[pos]))) {
        ++pos;
      } else if (data[pos] == '#') {
        while (pos < data.size() && data[pos] != '\n') ++pos;
      } else {
        break;
      }
    }
    std::size_t start = pos;
    while (pos < data.size() && !std::isspace(static_cast<unsigned char>(data[pos])) &&
           data[pos] != '#')
      ++pos;
    if (start == pos) throw ParseError(path, 1, "truncated PBM header");
    return data.substr(start, pos - start);
  };

  const std::string magic = token();
  if (magic != "P4" && magic != "P1")
    throw ParseError(path, 1, "expected P1 or P4 PBM, got '" + magic + "'");
  MaskImage mask;
  mask.width = std::stoi(token());
  mask.height = std::stoi(token());
  if (mask.width <= 0 || mask.height <= 0)
    throw ParseError(path, 1, "nonpositive PBM dimensions");
  mask.mask.assign(static_cast<std::size_t>(mask.width) * mask.height, 0);

  if (magic == "P4") {
    ++pos;  // the single whitespace byte after the height
    const int stride = (mask.width + 7) / 8;
    if (data.size() - pos < static_cast<std::size_t>(stride) * mask.height)
      throw IoError("truncated PBM data in " + path);
    for (int v = 0; v < mask.height; ++v)
      for (int u = 0; u < mask.width; ++u) {
        const unsigned char byte = static_cast<unsigned char>(
            data[pos + static_cast<std::size_t>(v) * stride + u / 8]);
        mask.at(u, v) = (byte >> (7 - u % 8)) & 1;
      }
  } else {
    long count = 0;
    const long total = static_cast<long>(mask.width) * mask.height;
    while (pos < data.size() && count < total) {
      const char c = data[pos++];
      if (std::isspace(static_cast<unsigned char>(c))) continue;
      if (c == '#') {
        while (pos < data.size() && data[pos] != '\n') ++pos;
        continue;
      }
      if (c != '0' && c != '1') throw ParseError(path, 1, "P1 pixels must be 0 or 1");
      mask.mask[static_cast<std::size_t>(count++)] = c == '1' ? 1 : 0;
    }
    if (count < total) throw IoError("truncated PBM data in " + path);
  }
  return mask;
}

void save_intrinsics(const std::string& path, const CameraIntrinsics& intr) {
  json j = intrinsics_to_json(intr);
  j["schema"] = 1;
  save_json_file(path, j);
}

CameraIntrinsics load_intrinsics(const std::string& path) {
  return intrinsics_from_json(load_json_file(path), path);
}

void save_depth_raw(const std::string& path, const DepthMap& depth) {
  std::ofstream out = open_out(path, true);
  out.write(reinterpret_cast<const char*>(depth.depth.data()),
            static_cast<std::streamsize>(depth.depth.size() * sizeof(float)));
  finish(out, path);
}

DepthMap load_depth_raw(const std::string& path, int width, int height) {
  if (width <= 0 || height <= 0) throw IoError("load_depth_raw: bad dimensions");
  std::ifstream in = open_in(path, true);
  DepthMap depth{width, height,
                 std::vector<float>(static_cast<std::size_t>(width) * height)};
  in.read(reinterpret_cast<char*>(depth.depth.data()),
          static_cast<std::streamsize>(depth.depth.size() * sizeof(float)));
  if (in.gcount() !=
      static_cast<std::streamsize>(depth.depth.size() * sizeof(float)))
    throw IoError("depth grid in " + path + " is smaller than the sidecar says");
  return depth;
}

void save_depth_sidecar(const std::string& path, const DepthSidecar& sidecar) {
  json j{{"schema", 1},
         {"width", sidecar.width},
         {"height", sidecar.height},
         {"intrinsics", intrinsics_to_json(sidecar.intrinsics)},
         {"object_id", sidecar.object_id}};
  if (sidecar.has_gt_pose) j["gt_pose"] = pose_to_json(sidecar.gt_pose);
  if (sidecar.has_inlier_rate) j["inlier_rate"] = sidecar.inlier_rate;
  save_json_file(path, j);
}

DepthSidecar load_depth_sidecar(const std::string& path) {
  json j = load_json_file(path);
  DepthSidecar s;
  try {
    if (j.at("schema").get<int>() != 1) throw ParseError(path, 1, "unsupported schema");
    s.width = j.at("width");
    s.height = j.at("height");
    s.intrinsics = intrinsics_from_json(j.at("intrinsics"), path);
    s.object_id = j.value("object_id", std::string());
  } catch (const json::exception& e) {
    throw ParseError(path, 1, std::string("bad depth sidecar: ") + e.what());
  }
  if (j.contains("gt_pose")) {
    s.has_gt_pose = true;
    s.gt_pose = pose_from_json(j["gt_pose"], path);
  }
  if (j.contains("inlier_rate")) {
    s.has_inlier_rate = true;
    s.inlier_rate = j["inlier_rate"];
  }
  return s;
}

void save_scene_sample(const std::string& stem, const SceneSample& sample) {
  save_depth_raw(stem + ".raw", sample.depth);
  save_pbm(stem + ".pbm", sample.mask);
  DepthSidecar sidecar;
  sidecar.width = sample.depth.width;
  sidecar.height = sample.depth.height;
  sidecar.intrinsics = sample.intrinsics;
  sidecar.has_gt_pose = true;
  sidecar.gt_pose = sample.gt_pose;
  sidecar.object_id = sample.object_id;
  sidecar.has_inlier_rate = true;
  sidecar.inlier_rate = sample.inlier_rate;
  save_depth_sidecar(stem + ".json", sidecar);
}

SceneSample load_scene_sample(const std::string& stem) {
  DepthSidecar sidecar = load_depth_sidecar(stem + ".json");
  SceneSample sample;
  sample.depth = load_depth_raw(stem + ".raw", sidecar.width, sidecar.height);
  sample.mask = load_pbm(stem + ".pbm");
  if (sample.mask.width != sidecar.width || sample.mask.height != sidecar.height)
    throw IoError("mask dimensions disagree with sidecar for " + stem);
  sample.intrinsics = sidecar.intrinsics;
  sample.gt_pose = sidecar.gt_pose;
  sample.object_id = sidecar.object_id;
  sample.inlier_rate = sidecar.inlier_rate;
  return sample;
}

void save_registration_result(const std::string& path, const RegistrationResult& result,
                              bool include_correspondences, bool include_timings) {
  json j{{"schema", 1}, {"method", result.method}, {"pose", pose_to_json(result.pose)}};
  json diag = json::object();
  for (const auto& [key, value] : result.diagnostics) diag[key] = value;
  j["diagnostics"] = diag;
  if (result.rotation_error) j["rotation_error"] = *result.rotation_error;
  if (result.translation_error) j["translation_error"] = *result.translation_error;
  if (include_correspondences) {
    json arr = json::array();
    for (const auto& c : result.correspondences)
      arr.push_back(json::array({c.i, c.j, c.weight}));
    j["correspondences"] = arr;
  }
  if (include_timings) j["wall_time"] = result.wall_time;
  save_json_file(path, j);
}

void write_gradient_check_csv(const std::string& path,
                              const std::vector<GradientCheckEntry>& entries) {
  std::ofstream out = open_out(path);
  out << "entry,analytic,finite_diff,rel_err\n";
  for (const auto& e : entries)
    out << e.entry << ',' << format_double(e.analytic) << ','
        << format_double(e.finite_diff) << ',' << format_double(e.rel_err) << '\n';
  finish(out, path);
}

}  // namespace occlureg
