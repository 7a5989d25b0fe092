#include "gig/io.hpp"

#include <algorithm>
#include <bit>
#include <cstring>
#include <fstream>
#include <sstream>

namespace gig::io {

namespace {

std::string read_file(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw DataError("cannot open " + path.string());
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

struct PlyProperty {
  std::string name;
  std::string type;        // scalar type, or the index type for lists
  std::string count_type;  // nonempty for list properties
};

struct PlyElement {
  std::string name;
  std::size_t count = 0;
  std::vector<PlyProperty> properties;
};

std::size_t scalar_size(const std::string& type, const std::string& context) {
  if (type == "char" || type == "int8" || type == "uchar" || type == "uint8")
    return 1;
  if (type == "short" || type == "int16" || type == "ushort" || type == "uint16")
    return 2;
  if (type == "int" || type == "int32" || type == "uint" || type == "uint32" ||
      type == "float" || type == "float32")
    return 4;
  if (type == "double" || type == "float64") return 8;
  throw DataError("unsupported PLY property type '" + type + "' in " + context);
}

bool is_float_type(const std::string& type) {
  return type == "float" || type == "float32" || type == "double" ||
         type == "float64";
}

double read_scalar_binary(const char* data, const std::string& type) {
  auto load = [&]<typename T>() {
    T v;
    std::memcpy(&v, data, sizeof(T));
    return static_cast<double>(v);
  };
  if (type == "char" || type == "int8") return load.operator()<std::int8_t>();
  if (type == "uchar" || type == "uint8") return load.operator()<std::uint8_t>();
  if (type == "short" || type == "int16") return load.operator()<std::int16_t>();
  if (type == "ushort" || type == "uint16") return load.operator()<std::uint16_t>();
  if (type == "int" || type == "int32") return load.operator()<std::int32_t>();
  if (type == "uint" || type == "uint32") return load.operator()<std::uint32_t>();
  if (type == "float" || type == "float32") return load.operator()<float>();
  return load.operator()<double>();
}

class AsciiTokens {
 public:
  AsciiTokens(const std::string& text, std::size_t offset)
      : text_(text), pos_(offset) {}

  std::string next(const std::string& context) {
    while (pos_ < text_.size() && std::isspace(static_cast<unsigned char>(text_[pos_])))
      ++pos_;
    if (pos_ >= text_.size())
      throw DataError("truncated PLY payload while reading " + context +
                      " (byte offset " + std::to_string(pos_) + ")");
    const std::size_t start = pos_;
    while (pos_ < text_.size() && !std::isspace(static_cast<unsigned char>(text_[pos_])))
      ++pos_;
    return text_.substr(start, pos_ - start);
  }

  double next_double(const std::string& context) {
    const std::string tok = next(context);
    try {
      return std::stod(tok);
    } catch (const std::exception&) {
      throw DataError("bad numeric token '" + tok + "' while reading " + context);
    }
  }

 private:
  const std::string& text_;
  std::size_t pos_;
};

}  // namespace

PlyContents read_ply(const std::filesystem::path& path) {
  const std::string text = read_file(path);
  std::size_t pos = 0;
  auto next_line = [&]() {
    if (pos >= text.size())
      throw DataError(path.string() + ": truncated PLY header at byte " +
                      std::to_string(pos));
    std::size_t eol = text.find('\n', pos);
    if (eol == std::string::npos) eol = text.size();
    std::string line = text.substr(pos, eol - pos);
    if (!line.empty() && line.back() == '\r') line.pop_back();
    pos = eol + 1;
    return line;
  };

  if (next_line() != "ply")
    throw DataError(path.string() + ": missing 'ply' magic");
  bool binary = false;
  bool have_format = false;
  std::vector<PlyElement> elements;
  while (true) {
    const std::string line = next_line();
    std::istringstream ls(line);
    std::string word;
    ls >> word;
    if (word == "comment" || word.empty()) continue;
    if (word == "format") {
      std::string fmt, version;
      ls >> fmt >> version;
      if (fmt == "ascii")
        binary = false;
      else if (fmt == "binary_little_endian")
        binary = true;
      else
        throw DataError(path.string() + ": unsupported PLY format '" + fmt + "'");
      have_format = true;
    } else if (word == "element") {
      PlyElement e;
      ls >> e.name >> e.count;
      if (ls.fail())
        throw DataError(path.string() + ": malformed element line '" + line + "'");
      elements.push_back(std::move(e));
    } else if (word == "property") {
      if (elements.empty())
        throw DataError(path.string() + ": property before any element");
      PlyProperty p;
      std::string t;
      ls >> t;
      if (t == "list") {
        ls >> p.count_type >> p.type >> p.name;
        scalar_size(p.count_type, path.string());
        if (is_float_type(p.count_type))
          throw DataError(path.string() + ": list count must be an integer type");
      } else {
        p.type = t;
        ls >> p.name;
      }
      if (ls.fail())
        throw DataError(path.string() + ": malformed property line '" + line + "'");
      scalar_size(p.type, path.string());
      elements.back().properties.push_back(std::move(p));
    } else if (word == "end_header") {
      break;
    } else {
      throw DataError(path.string() + ": unexpected header keyword '" + word + "'");
    }
  }
  if (!have_format) throw DataError(path.string() + ": missing format line");

  PlyContents out;
  AsciiTokens tokens(text, pos);
  std::size_t offset = pos;

  for (const auto& element : elements) {
    const bool is_vertex = element.name == "vertex";
    const bool is_face = element.name == "face";
    int xi = -1, yi = -1, zi = -1;
    int list_prop = -1;
    if (is_vertex) {
      for (std::size_t i = 0; i < element.properties.size(); ++i) {
        const auto& p = element.properties[i];
        if (!p.count_type.empty())
          throw DataError(path.string() + ": list property in vertex element");
        if (p.name == "x") xi = static_cast<int>(i);
        if (p.name == "y") yi = static_cast<int>(i);
        if (p.name == "z") zi = static_cast<int>(i);
      }
      if (xi < 0 || yi < 0 || zi < 0)
        throw DataError(path.string() + ": vertex element lacks x/y/z");
      for (int idx : {xi, yi, zi})
        if (!is_float_type(element.properties[idx].type))
          throw DataError(path.string() + ": vertex coordinates must be float or double");
      out.vertices.reserve(element.count);
    }
    if (is_face) {
      for (std::size_t i = 0; i < element.properties.size(); ++i)
        if (element.properties[i].name == "vertex_indices" ||
            element.properties[i].name == "vertex_index")
          list_prop = static_cast<int>(i);
      if (list_prop < 0 || element.properties[list_prop].count_type.empty())
        throw DataError(path.string() + ": face element lacks a vertex_indices list");
    }

    for (std::size_t row = 0; row < element.count; ++row) {
      double coords[3] = {0, 0, 0};
      std::vector<long long> face_idx;
      for (std::size_t pi = 0; pi < element.properties.size(); ++pi) {
        const auto& prop = element.properties[pi];
        const std::string context = "element '" + element.name + "' row " +
                                    std::to_string(row);
        if (!prop.count_type.empty()) {
          long long count;
          if (binary) {
            const std::size_t csz = scalar_size(prop.count_type, context);
            if (offset + csz > text.size())
              throw DataError(path.string() + ": payload of element '" +
                              element.name + "' exceeds file size at byte " +
                              std::to_string(offset));
            count = static_cast<long long>(
                read_scalar_binary(text.data() + offset, prop.count_type));
            offset += csz;
          } else {
            count = static_cast<long long>(tokens.next_double(context));
          }
          if (count < 0)
            throw DataError(path.string() + ": negative list count in " + context);
          const std::size_t isz = scalar_size(prop.type, context);
          for (long long t = 0; t < count; ++t) {
            double v;
            if (binary) {
              if (offset + isz > text.size())
                throw DataError(path.string() + ": payload of element '" +
                                element.name + "' exceeds file size at byte " +
                                std::to_string(offset));
              v = read_scalar_binary(text.data() + offset, prop.type);
              offset += isz;
            } else {
              v = tokens.next_double(context);
            }
            if (static_cast<int>(pi) == list_prop)
              face_idx.push_back(static_cast<long long>(v));
          }
        } else {
          double v;
          if (binary) {
            const std::size_t sz = scalar_size(prop.type, context);
            if (offset + sz > text.size())
              throw DataError(path.string() + ": payload of element '" +
                              element.name + "' exceeds file size at byte " +
                              std::to_string(offset));
            v = read_scalar_binary(text.data() + offset, prop.type);
            offset += sz;
          } else {
            v = tokens.next_double(context);
          }
          if (is_vertex) {
            if (static_cast<int>(pi) == xi) coords[0] = v;
            if (static_cast<int>(pi) == yi) coords[1] = v;
            if (static_cast<int>(pi) == zi) coords[2] = v;
          }
        }
      }
      if (is_vertex) out.vertices.push_back({coords[0], coords[1], coords[2]});
      if (is_face) {
        if (face_idx.size() < 3)
          throw DataError(path.string() + ": face with fewer than 3 vertices");
        for (std::size_t t = 1; t + 1 < face_idx.size(); ++t)
          out.faces.push_back({static_cast<int>(face_idx[0]),
                               static_cast<int>(face_idx[t]),
                               static_cast<int>(face_idx[t + 1])});
      }
    }
  }

  const long long n = static_cast<long long>(out.vertices.size());
  for (const auto& f : out.faces)
    for (int idx : f)
      if (idx < 0 || idx >= n)
        throw DataError(path.string() + ": face index " + std::to_string(idx) +
                        " out of range");
  return out;
}

geom::PointCloud read_ply_cloud(const std::filesystem::path& path) {
  PlyContents contents = read_ply(path);
  if (contents.vertices.empty())
    throw DataError(path.string() + ": no vertices");
  return geom::PointCloud(std::move(contents.vertices));
}

geom::Mesh read_ply_mesh(const std::filesystem::path& path) {
  PlyContents contents = read_ply(path);
  if (contents.faces.empty())
    throw DataError(path.string() + ": no faces; not a mesh");
  geom::Mesh m;
  m.vertices = std::move(contents.vertices);
  m.faces = std::move(contents.faces);
  return m;
}

namespace {

void write_ply_payload(std::ofstream& out, const std::vector<geom::Vec3>& pts) {
  static_assert(std::endian::native == std::endian::little,
                "PLY writer assumes a little-endian host");
  for (const auto& p : pts) {
    const double v[3] = {p.x, p.y, p.z};
    out.write(reinterpret_cast<const char*>(v), sizeof(v));
  }
}

}  // namespace

void write_ply(const std::filesystem::path& path, const geom::PointCloud& cloud) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw DataError("cannot open " + path.string() + " for writing");
  out << "ply\nformat binary_little_endian 1.0\nelement vertex "
      << cloud.size()
      << "\nproperty double x\nproperty double y\nproperty double z\nend_header\n";
  write_ply_payload(out, cloud.points);
  if (!out) throw DataError("write failed for " + path.string());
}

void write_ply(const std::filesystem::path& path, const geom::Mesh& mesh) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw DataError("cannot open " + path.string() + " for writing");
  out << "ply\nformat binary_little_endian 1.0\nelement vertex "
      << mesh.vertices.size()
      << "\nproperty double x\nproperty double y\nproperty double z\n"
      << "element face " << mesh.faces.size()
      << "\nproperty list uchar int vertex_indices\nend_header\n";
  write_ply_payload(out, mesh.vertices);
  for (const auto& f : mesh.faces) {
    const unsigned char count = 3;
    out.write(reinterpret_cast<const char*>(&count), 1);
    const std::int32_t idx[3] = {f[0], f[1], f[2]};
    out.write(reinterpret_cast<const char*>(idx), sizeof(idx));
  }
  if (!out) throw DataError("write failed for " + path.string());
}

geom::Mesh read_obj(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw DataError("cannot open " + path.string());
  geom::Mesh mesh;
  std::string line;
  int line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    std::istringstream ls(line);
    std::string word;
    if (!(ls >> word)) continue;
    if (word == "v") {
      geom::Vec3 v;
      if (!(ls >> v.x >> v.y >> v.z))
        throw DataError(path.string() + ":" + std::to_string(line_no) +
                        ": malformed vertex");
      mesh.vertices.push_back(v);
    } else if (word == "f") {
      std::vector<int> idx;
      std::string tok;
      while (ls >> tok) {
        const std::string head = tok.substr(0, tok.find('/'));
        long long v;
        try {
          v = std::stoll(head);
        } catch (const std::exception&) {
          throw DataError(path.string() + ":" + std::to_string(line_no) +
                          ": bad face index '" + tok + "'");
        }
        long long resolved =
            v < 0 ? static_cast<long long>(mesh.vertices.size()) + v : v - 1;
        if (resolved < 0 ||
            resolved >= static_cast<long long>(mesh.vertices.size()))
          throw DataError(path.string() + ":" + std::to_string(line_no) +
                          ": face index " + std::to_string(v) + " out of range");
        idx.push_back(static_cast<int>(resolved));
      }
      if (idx.size() < 3)
        throw DataError(path.string() + ":" + std::to_string(line_no) +
                        ": face with fewer than 3 vertices");
      for (std::size_t t = 1; t + 1 < idx.size(); ++t)
        mesh.faces.push_back({idx[0], idx[t], idx[t + 1]});
    }
    // normals, texcoords, materials and the rest are ignored
  }
  return mesh;
}

std::map<std::string, std::string> read_config_file(
    const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw DataError("cannot open config " + path.string());
  std::map<std::string, std::string> out;
  std::string line;
  int line_no = 0;
  auto trim = [](std::string s) {
    const auto b = s.find_first_not_of(" \t\r");
    const auto e = s.find_last_not_of(" \t\r");
    return b == std::string::npos ? std::string() : s.substr(b, e - b + 1);
  };
  while (std::getline(in, line)) {
    ++line_no;
    const auto hash = line.find('#');
    if (hash != std::string::npos) line = line.substr(0, hash);
    line = trim(line);
    if (line.empty()) continue;
    const auto eq = line.find('=');
    if (eq == std::string::npos)
      throw DataError(path.string() + ":" + std::to_string(line_no) +
                      ": expected key=value");
    const std::string key = trim(line.substr(0, eq));
    if (key.empty())
      throw DataError(path.string() + ":" + std::to_string(line_no) + ": empty key");
    out[key] = trim(line.substr(eq + 1));
  }
  return out;
}

namespace {

std::vector<std::string> read_name_list(const std::filesystem::path& path) {
  std::ifstream in(path);
  std::vector<std::string> names;
  std::string line;
  while (std::getline(in, line)) {
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (!line.empty()) names.push_back(line);
  }
  return names;
}

}  // namespace

DatasetDir load_dataset_dir(const std::filesystem::path& dir, bool normalize) {
  if (!std::filesystem::is_directory(dir))
    throw DataError("dataset directory not found: " + dir.string());
  DatasetDir out;
  for (const auto& entry : std::filesystem::directory_iterator(dir))
    if (entry.is_regular_file() && entry.path().extension() == ".ply")
      out.names.push_back(entry.path().filename().string());
  std::sort(out.names.begin(), out.names.end());
  if (out.names.empty())
    throw DataError("no .ply files in " + dir.string());
  for (const auto& name : out.names) {
    geom::PointCloud cloud = read_ply_cloud(dir / name);
    out.clouds.push_back(normalize ? geom::normalize_unit_sphere(cloud) : cloud);
  }

  const auto labels_path = dir / "labels.csv";
  if (std::filesystem::exists(labels_path)) {
    std::ifstream in(labels_path);
    std::map<std::string, std::string> by_name;
    std::string line;
    int line_no = 0;
    while (std::getline(in, line)) {
      ++line_no;
      if (!line.empty() && line.back() == '\r') line.pop_back();
      if (line.empty() || line[0] == '#') continue;
      const auto comma = line.find(',');
      if (comma == std::string::npos)
        throw DataError(labels_path.string() + ":" + std::to_string(line_no) +
                        ": expected filename,category");
      by_name[line.substr(0, comma)] = line.substr(comma + 1);
    }
    std::vector<std::string> cats;
    for (const auto& [file, cat] : by_name) cats.push_back(cat);
    std::sort(cats.begin(), cats.end());
    cats.erase(std::unique(cats.begin(), cats.end()), cats.end());
    out.categories = cats;
    for (const auto& name : out.names) {
      const auto it = by_name.find(name);
      if (it == by_name.end())
        throw DataError(labels_path.string() + ": no label for " + name);
      const auto cat = std::lower_bound(cats.begin(), cats.end(), it->second);
      out.labels.push_back(static_cast<int>(cat - cats.begin()));
    }
  }

  for (const auto& [file, member] :
       {std::pair{"train.txt", &out.train_split}, {"val.txt", &out.val_split},
        {"test.txt", &out.test_split}}) {
    const auto p = dir / file;
    if (std::filesystem::exists(p)) *member = read_name_list(p);
  }
  return out;
}

}  // namespace gig::io
