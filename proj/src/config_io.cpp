#include "lorentz/config_io.hpp"

#include <cstdio>

#include "lorentz/error.hpp"

namespace lorentz {

namespace {

const Json& field(const Json& j, const char* name) {
  if (!j.is_object() || !j.contains(name))
    throw ConfigError(std::string("missing field \"") + name + "\"");
  return j.at(name);
}

template <class T>
T get(const Json& j, const char* name) {
  try {
    return field(j, name).get<T>();
  } catch (const Json::exception& e) {
    throw ConfigError(std::string("field \"") + name + "\": " + e.what());
  }
}

template <class T>
T get_or(const Json& j, const char* name, T fallback) {
  return j.contains(name) ? get<T>(j, name) : fallback;
}

Json lattice_json(const Matrix& basis, const std::vector<double>& shift) {
  Json j = {{"basis", basis}};
  if (!shift.empty()) j["shift"] = shift;
  return j;
}

}  // namespace

ScattererConfig scatterer_config_from_json(const Json& j) {
  if (!j.is_object()) throw ConfigError("scatterer config must be a JSON object");
  const std::string kind = get<std::string>(j, "kind");
  if (kind == "lattice") {
    LatticeSpec lat{get<Matrix>(j, "basis")};
    if (j.contains("shift")) return AffineLatticeSpec{lat, get<std::vector<double>>(j, "shift")};
    return lat;
  }
  if (kind == "poisson") {
    PoissonSpec p;
    p.dim = get_or<int>(j, "dim", 2);
    p.seed = get<std::uint64_t>(j, "seed");
    p.intensity = get_or<double>(j, "intensity", 1.0);
    return p;
  }
  if (kind == "union") {
    UnionSpec u;
    for (const auto& m : field(j, "members")) {
      UnionMember mem;
      mem.lattice.lattice.basis = get<Matrix>(m, "basis");
      mem.lattice.shift = get_or<std::vector<double>>(m, "shift", {});
      if (m.contains("density")) mem.density = get<double>(m, "density");
      u.members.push_back(mem);
    }
    u.incommensurable = get_or<bool>(j, "incommensurable", true);
    u.normalize = get_or<bool>(j, "normalize", false);
    return u;
  }
  if (kind == "cut_project") {
    CutProjectSpec c;
    c.dim = get<int>(j, "dim");
    c.basis = get<Matrix>(j, "basis");
    const Json& w = field(j, "window");
    const std::string wk = get<std::string>(w, "kind");
    if (wk == "polytope") {
      c.window.kind = Window::Kind::polytope;
      c.window.vertices = get<std::vector<std::vector<double>>>(w, "vertices");
    } else if (wk == "points") {
      c.window.kind = Window::Kind::points;
      c.window.vertices = get<std::vector<std::vector<double>>>(w, "points");
    } else {
      throw ConfigError("unknown window kind \"" + wk + "\"");
    }
    c.offset = get_or<std::vector<double>>(j, "offset", {});
    return c;
  }
  if (kind == "delone") {
    return DeloneSpec{{get<Matrix>(j, "basis")},
                      get<std::vector<std::vector<double>>>(j, "translates")};
  }
  if (kind == "finite") {
    FiniteSpec f;
    f.dim = get_or<int>(j, "dim", 2);
    f.points = get<std::vector<std::vector<double>>>(j, "points");
    return f;
  }
  throw ConfigError("unknown scatterer kind \"" + kind + "\"");
}

Json to_json(const ScattererConfig& config) {
  return std::visit(
      [](const auto& s) -> Json {
        using T = std::decay_t<decltype(s)>;
        if constexpr (std::is_same_v<T, LatticeSpec>) {
          Json j = lattice_json(s.basis, {});
          j["kind"] = "lattice";
          return j;
        } else if constexpr (std::is_same_v<T, AffineLatticeSpec>) {
          Json j = lattice_json(s.lattice.basis, s.shift);
          j["kind"] = "lattice";
          return j;
        } else if constexpr (std::is_same_v<T, PoissonSpec>) {
          return {{"kind", "poisson"}, {"dim", s.dim}, {"seed", s.seed}, {"intensity", s.intensity}};
        } else if constexpr (std::is_same_v<T, UnionSpec>) {
          Json members = Json::array();
          for (const auto& m : s.members) {
            Json mj = lattice_json(m.lattice.lattice.basis, m.lattice.shift);
            if (m.density) mj["density"] = *m.density;
            members.push_back(mj);
          }
          return {{"kind", "union"},
                  {"members", members},
                  {"incommensurable", s.incommensurable},
                  {"normalize", s.normalize}};
        } else if constexpr (std::is_same_v<T, CutProjectSpec>) {
          Json w;
          if (s.window.kind == Window::Kind::polytope)
            w = {{"kind", "polytope"}, {"vertices", s.window.vertices}};
          else
            w = {{"kind", "points"}, {"points", s.window.vertices}};
          Json j = {{"kind", "cut_project"}, {"dim", s.dim}, {"basis", s.basis}, {"window", w}};
          if (!s.offset.empty()) j["offset"] = s.offset;
          return j;
        } else if constexpr (std::is_same_v<T, DeloneSpec>) {
          return {{"kind", "delone"}, {"basis", s.lattice.basis}, {"translates", s.translates}};
        } else {
          return {{"kind", "finite"}, {"dim", s.dim}, {"points", s.points}};
        }
      },
      config);
}

ScatteringMap scattering_map_from_json(const Json& j) {
  if (j.is_string() && j.get<std::string>() == "specular") return ScatteringMap::specular();
  const std::string kind = get<std::string>(j, "kind");
  if (kind == "specular") return ScatteringMap::specular();
  if (kind == "tabulated")
    return ScatteringMap::tabulated(get<std::vector<double>>(j, "w"),
                                    get<std::vector<double>>(j, "theta"));
  throw ConfigError("unknown scattering map kind \"" + kind + "\"");
}

Json to_json(const ScatteringMap& map) {
  if (map.kind() == ScatteringMap::Kind::specular) return {{"kind", "specular"}};
  return {{"kind", "tabulated"}, {"w", map.table_w()}, {"theta", map.table_theta()}};
}

KernelModel kernel_model_from_json(const Json& j) {
  const std::string kind = j.is_string() ? j.get<std::string>() : get<std::string>(j, "kind");
  if (kind == "poisson")
    return normalized(PoissonKernel{j.is_object() ? get_or<int>(j, "dim", 2) : 2});
  if (kind == "lattice2d") return Lattice2DKernel{};
  if (kind == "union") return normalized(UnionKernel{get<std::vector<double>>(j, "densities")});
  throw ConfigError("unknown kernel model \"" + kind + "\"");
}

Json to_json(const KernelModel& model) {
  return std::visit(
      [](const auto& m) -> Json {
        using T = std::decay_t<decltype(m)>;
        if constexpr (std::is_same_v<T, PoissonKernel>) return {{"kind", "poisson"}, {"dim", m.dim}};
        else if constexpr (std::is_same_v<T, Lattice2DKernel>) return {{"kind", "lattice2d"}};
        else return {{"kind", "union"}, {"densities", m.densities}};
      },
      model);
}

std::string digest(const Json& j) {
  const std::string s = j.dump();
  std::uint64_t h = 0xcbf29ce484222325ull;
  for (unsigned char c : s) {
    h ^= c;
    h *= 0x100000001b3ull;
  }
  char buf[17];
  std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(h));
  return buf;
}

}  // namespace lorentz
