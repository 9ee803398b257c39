#include "lvct/io.hpp"

#include <bit>
#include <cstdint>
#include <cstdio>
#include <fstream>
#include <sstream>
#include <stdexcept>

#include "json.hpp"

namespace lvct {

static_assert(std::endian::native == std::endian::little,
              "file formats are little-endian; add byte swapping for this platform");

using nlohmann::json;

namespace {

void write_bytes(const std::filesystem::path& path, const void* data, std::size_t bytes) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw std::runtime_error("cannot open for writing: " + path.string());
  out.write(static_cast<const char*>(data), static_cast<std::streamsize>(bytes));
  if (!out) throw std::runtime_error("short write: " + path.string());
}

std::vector<char> read_bytes(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary | std::ios::ate);
  if (!in) throw std::runtime_error("cannot open for reading: " + path.string());
  std::vector<char> buf(static_cast<std::size_t>(in.tellg()));
  in.seekg(0);
  in.read(buf.data(), static_cast<std::streamsize>(buf.size()));
  if (!in) throw std::runtime_error("short read: " + path.string());
  return buf;
}

void write_f32(const std::filesystem::path& path, const Vector& values) {
  std::vector<float> buf(values.size());
  for (Eigen::Index i = 0; i < values.size(); ++i) buf[i] = static_cast<float>(values[i]);
  write_bytes(path, buf.data(), buf.size() * sizeof(float));
}

Vector read_f32(const std::filesystem::path& path, std::size_t expected) {
  std::vector<char> raw = read_bytes(path);
  if (raw.size() != expected * sizeof(float))
    throw std::runtime_error("unexpected payload size in " + path.string());
  Vector values(static_cast<Eigen::Index>(expected));
  const float* f = reinterpret_cast<const float*>(raw.data());
  for (std::size_t i = 0; i < expected; ++i) values[static_cast<Eigen::Index>(i)] = f[i];
  return values;
}

void write_json(const std::filesystem::path& path, const json& j) {
  std::ofstream out(path);
  if (!out) throw std::runtime_error("cannot open for writing: " + path.string());
  out << j.dump(2) << "\n";
}

json read_json(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot open for reading: " + path.string());
  json j;
  in >> j;
  return j;
}

json geometry_to_json(const ScanGeometry& g) {
  return json{{"num_views", g.num_views},
              {"angle_start_deg", g.angle_start_deg},
              {"angle_end_deg", g.angle_end_deg},
              {"num_detectors", g.num_detectors},
              {"detector_spacing", g.detector_spacing}};
}

ScanGeometry geometry_from_json(const json& j) {
  ScanGeometry g;
  g.num_views = j.at("num_views").get<int>();
  g.angle_start_deg = j.at("angle_start_deg").get<double>();
  g.angle_end_deg = j.at("angle_end_deg").get<double>();
  g.num_detectors = j.at("num_detectors").get<int>();
  g.detector_spacing = j.at("detector_spacing").get<double>();
  return g;
}

std::filesystem::path with_ext(std::filesystem::path base, const char* ext) {
  base += ext;
  return base;
}

}  // namespace

void write_image(const std::filesystem::path& base, const Image& img) {
  write_f32(with_ext(base, ".f32"), img.pixels);
  write_json(with_ext(base, ".json"), json{{"side", img.side}});
}

Image read_image(const std::filesystem::path& base) {
  json meta = read_json(with_ext(base, ".json"));
  Image img(meta.at("side").get<int>());
  img.pixels = read_f32(with_ext(base, ".f32"), static_cast<std::size_t>(img.size()));
  return img;
}

void write_sinogram(const std::filesystem::path& base, const Sinogram& g,
                    const ScanGeometry& geometry) {
  write_f32(with_ext(base, ".f32"), g.values);
  write_json(with_ext(base, ".json"), json{{"num_views", g.num_views},
                                           {"num_detectors", g.num_detectors},
                                           {"geometry", geometry_to_json(geometry)}});
}

Sinogram read_sinogram(const std::filesystem::path& base, ScanGeometry* geometry_out) {
  json meta = read_json(with_ext(base, ".json"));
  Sinogram g(meta.at("num_views").get<int>(), meta.at("num_detectors").get<int>());
  g.values = read_f32(with_ext(base, ".f32"), static_cast<std::size_t>(g.size()));
  if (geometry_out) *geometry_out = geometry_from_json(meta.at("geometry"));
  return g;
}

void write_pgm(const std::filesystem::path& path, const Image& img) {
  double lo = img.pixels.minCoeff(), hi = img.pixels.maxCoeff();
  double scale = hi > lo ? 255.0 / (hi - lo) : 0.0;
  std::ostringstream out;
  out << "P5\n" << img.side << " " << img.side << "\n255\n";
  std::string header = out.str();
  std::vector<unsigned char> bytes(static_cast<std::size_t>(img.size()));
  for (int i = 0; i < img.size(); ++i)
    bytes[static_cast<std::size_t>(i)] =
        static_cast<unsigned char>(std::lround((img.pixels[i] - lo) * scale));
  std::ofstream f(path, std::ios::binary);
  if (!f) throw std::runtime_error("cannot open for writing: " + path.string());
  f.write(header.data(), static_cast<std::streamsize>(header.size()));
  f.write(reinterpret_cast<const char*>(bytes.data()),
          static_cast<std::streamsize>(bytes.size()));
}

void save_network(const std::filesystem::path& base, const Network& net,
                  const std::string& metadata) {
  json manifest{
      {"depth", net.spec.depth},
      {"width", net.spec.width},
      {"kernel", net.spec.kernel},
      {"residual", net.spec.residual},
      {"use_relu", net.spec.use_relu},
      {"init", net.spec.init == WeightInit::glorot_uniform ? "glorot_uniform"
                                                           : "he_uniform"},
      {"init_seed", net.init_seed},
      {"metadata", metadata},
  };
  write_json(with_ext(base, ".json"), manifest);

  std::vector<float> blob;
  for (const ConvLayer& layer : net.layers) {
    for (int oc = 0; oc < layer.out_channels; ++oc)
      for (int j = 0; j < layer.weights.cols(); ++j)
        blob.push_back(static_cast<float>(layer.weights(oc, j)));
    for (int oc = 0; oc < layer.out_channels; ++oc)
      blob.push_back(static_cast<float>(layer.biases[oc]));
  }
  write_bytes(with_ext(base, ".bin"), blob.data(), blob.size() * sizeof(float));
}

Network load_network(const std::filesystem::path& base) {
  json manifest = read_json(with_ext(base, ".json"));
  NetworkSpec spec;
  spec.depth = manifest.at("depth").get<int>();
  spec.width = manifest.at("width").get<int>();
  spec.kernel = manifest.at("kernel").get<int>();
  spec.residual = manifest.at("residual").get<bool>();
  spec.use_relu = manifest.at("use_relu").get<bool>();
  std::string init = manifest.at("init").get<std::string>();
  if (init == "glorot_uniform")
    spec.init = WeightInit::glorot_uniform;
  else if (init == "he_uniform")
    spec.init = WeightInit::he_uniform;
  else
    throw std::runtime_error("unknown init scheme in " + base.string() + ": " + init);

  Network net = init_network(spec, manifest.at("init_seed").get<std::uint64_t>());
  std::vector<char> raw = read_bytes(with_ext(base, ".bin"));
  std::size_t expected = net.parameter_count() * sizeof(float);
  if (raw.size() != expected)
    throw std::runtime_error("weight blob size mismatch in " + base.string());
  const float* f = reinterpret_cast<const float*>(raw.data());
  for (ConvLayer& layer : net.layers) {
    for (int oc = 0; oc < layer.out_channels; ++oc)
      for (int j = 0; j < layer.weights.cols(); ++j) layer.weights(oc, j) = *f++;
    for (int oc = 0; oc < layer.out_channels; ++oc) layer.biases[oc] = *f++;
  }
  net.reset_moments();
  return net;
}

std::string factor_cache_key(const ScanGeometry& geometry, int side,
                             double truncation_tol) {
  std::ostringstream tag;
  tag << geometry.num_views << "|" << format_double(geometry.angle_start_deg) << "|"
      << format_double(geometry.angle_end_deg) << "|" << geometry.num_detectors << "|"
      << format_double(geometry.detector_spacing) << "|" << side << "|"
      << format_double(truncation_tol);
  std::string s = tag.str();
  std::uint64_t h = 1469598103934665603ull;  // FNV-1a
  for (unsigned char c : s) {
    h ^= c;
    h *= 1099511628211ull;
  }
  char buf[32];
  std::snprintf(buf, sizeof(buf), "%016llx", static_cast<unsigned long long>(h));
  return std::string("svd_") + buf;
}

void save_factors(const std::filesystem::path& dir, const std::string& key,
                  const SvdFactors& factors) {
  std::filesystem::create_directories(dir);
  json manifest{{"rows", factors.rows()},
                {"cols", factors.cols()},
                {"rank", factors.rank()},
                {"side", factors.side}};
  write_json(dir / (key + ".json"), manifest);

  // Payload: singular values, then U and V column-major, all float64.
  std::size_t count = static_cast<std::size_t>(factors.rank()) +
                      static_cast<std::size_t>(factors.left.size()) +
                      static_cast<std::size_t>(factors.right.size());
  std::vector<double> blob;
  blob.reserve(count);
  blob.insert(blob.end(), factors.singular_values.data(),
              factors.singular_values.data() + factors.rank());
  blob.insert(blob.end(), factors.left.data(), factors.left.data() + factors.left.size());
  blob.insert(blob.end(), factors.right.data(),
              factors.right.data() + factors.right.size());
  write_bytes(dir / (key + ".f64"), blob.data(), blob.size() * sizeof(double));
}

std::optional<SvdFactors> try_load_factors(const std::filesystem::path& dir,
                                           const std::string& key) {
  std::filesystem::path manifest_path = dir / (key + ".json");
  std::filesystem::path payload_path = dir / (key + ".f64");
  if (!std::filesystem::exists(manifest_path) || !std::filesystem::exists(payload_path))
    return std::nullopt;
  json manifest = read_json(manifest_path);
  int rows = manifest.at("rows").get<int>();
  int cols = manifest.at("cols").get<int>();
  int rank = manifest.at("rank").get<int>();

  SvdFactors f;
  f.side = manifest.at("side").get<int>();
  f.singular_values.resize(rank);
  f.left.resize(rows, rank);
  f.right.resize(cols, rank);
  std::vector<char> raw = read_bytes(payload_path);
  std::size_t expected =
      (static_cast<std::size_t>(rank) + f.left.size() + f.right.size()) * sizeof(double);
  if (raw.size() != expected)
    throw std::runtime_error("factor cache payload size mismatch: " +
                             payload_path.string());
  const double* d = reinterpret_cast<const double*>(raw.data());
  std::copy(d, d + rank, f.singular_values.data());
  d += rank;
  std::copy(d, d + f.left.size(), f.left.data());
  d += f.left.size();
  std::copy(d, d + f.right.size(), f.right.data());
  return f;
}

void write_phantoms_jsonl(const std::filesystem::path& path,
                          const std::vector<EllipsePhantom>& phantoms) {
  std::ofstream out(path);
  if (!out) throw std::runtime_error("cannot open for writing: " + path.string());
  for (const EllipsePhantom& p : phantoms) {
    json ellipses = json::array();
    for (const Ellipse& e : p.ellipses)
      ellipses.push_back(json::array({e.center_x, e.center_y, e.semi_axis_a,
                                      e.semi_axis_b, e.rotation, e.amplitude}));
    out << json{{"seed", p.seed}, {"ellipses", ellipses}}.dump() << "\n";
  }
}

std::vector<EllipsePhantom> read_phantoms_jsonl(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot open for reading: " + path.string());
  std::vector<EllipsePhantom> phantoms;
  std::string line;
  while (std::getline(in, line)) {
    if (line.empty()) continue;
    json j = json::parse(line);
    EllipsePhantom p;
    p.seed = j.at("seed").get<std::uint64_t>();
    for (const json& e : j.at("ellipses")) {
      Ellipse el;
      el.center_x = e.at(0).get<double>();
      el.center_y = e.at(1).get<double>();
      el.semi_axis_a = e.at(2).get<double>();
      el.semi_axis_b = e.at(3).get<double>();
      el.rotation = e.at(4).get<double>();
      el.amplitude = e.at(5).get<double>();
      p.ellipses.push_back(el);
    }
    phantoms.push_back(std::move(p));
  }
  return phantoms;
}

std::string format_double(double value) {
  char buf[40];
  std::snprintf(buf, sizeof(buf), "%.9g", value);
  return buf;
}

}  // namespace lvct
