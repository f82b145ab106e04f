#include "convert.hpp"

#include <algorithm>
#include <cctype>
#include <cstdint>
#include <fstream>
#include <map>
#include <numeric>
#include <set>
#include <sstream>
#include <unordered_map>

#include "fairlp/error.hpp"

namespace fs = std::filesystem;
using fairlp::InputError;

namespace {

std::ifstream open_in(const fs::path& path) {
  std::ifstream in(path);
  if (!in) throw InputError("cannot read " + path.string());
  return in;
}

std::ofstream open_out(const fs::path& path) {
  std::ofstream out(path);
  if (!out) throw InputError("cannot write " + path.string());
  return out;
}

struct DisjointSets {
  std::vector<std::size_t> parent;
  explicit DisjointSets(std::size_t n) : parent(n) { std::iota(parent.begin(), parent.end(), 0); }
  std::size_t find(std::size_t x) {
    while (parent[x] != x) x = parent[x] = parent[parent[x]];
    return x;
  }
  void unite(std::size_t a, std::size_t b) { parent[find(a)] = find(b); }
};

/// Writes "a b" lines and "name,label" lines; names are written as given.
void write_dataset(const fs::path& out_dir, const std::vector<std::string>& names,
                   const std::vector<std::string>& labels, const std::set<std::pair<std::size_t, std::size_t>>& edges) {
  fs::create_directories(out_dir);
  auto e = open_out(out_dir / "edges.txt");
  for (const auto& [a, b] : edges) e << names[a] << ' ' << names[b] << '\n';
  auto a = open_out(out_dir / "attrs.csv");
  for (std::size_t i = 0; i < names.size(); ++i) a << names[i] << ',' << labels[i] << '\n';
}

std::size_t count_groups(const std::vector<std::string>& labels) {
  return std::set<std::string>(labels.begin(), labels.end()).size();
}

// Minimal GML reader: key/value pairs and nested [ ] lists.
class GmlTokens {
 public:
  explicit GmlTokens(std::istream& in) : in_(in) {}

  bool next(std::string& tok) {
    char c;
    while (in_.get(c)) {
      if (std::isspace(static_cast<unsigned char>(c))) continue;
      if (c == '#') {
        std::string skip;
        std::getline(in_, skip);
        continue;
      }
      if (c == '[' || c == ']') {
        tok.assign(1, c);
        return true;
      }
      if (c == '"') {
        tok = "\"";
        while (in_.get(c) && c != '"') tok += c;
        return true;
      }
      tok.assign(1, c);
      while (in_.peek() != EOF && !std::isspace(in_.peek()) && in_.peek() != '[' && in_.peek() != ']')
        tok += static_cast<char>(in_.get());
      return true;
    }
    return false;
  }

 private:
  std::istream& in_;
};

std::string unquote(const std::string& s) { return !s.empty() && s[0] == '"' ? s.substr(1) : s; }

}  // namespace

ConversionSummary convert_polblogs(const fs::path& gml, const fs::path& out_dir) {
  auto in = open_in(gml);
  GmlTokens tokens(in);
  struct Node {
    std::string id;
    std::string value;
  };
  std::vector<Node> nodes;
  std::vector<std::pair<std::string, std::string>> raw_edges;

  std::string tok;
  std::vector<std::string> stack;
  std::map<std::string, std::string> fields;
  std::string pending_key;
  while (tokens.next(tok)) {
    if (tok == "[") {
      stack.push_back(pending_key);
      pending_key.clear();
      fields.clear();
    } else if (tok == "]") {
      if (stack.empty()) throw InputError("unbalanced ']' in " + gml.string());
      const std::string kind = stack.back();
      stack.pop_back();
      if (kind == "node") {
        if (!fields.count("id")) throw InputError("GML node without id");
        nodes.push_back({fields["id"], fields.count("value") ? fields["value"] : std::string()});
      } else if (kind == "edge") {
        if (!fields.count("source") || !fields.count("target")) throw InputError("GML edge without endpoints");
        raw_edges.emplace_back(fields["source"], fields["target"]);
      }
      fields.clear();
    } else if (pending_key.empty()) {
      pending_key = tok;
    } else {
      fields[pending_key] = unquote(tok);
      pending_key.clear();
    }
  }
  if (nodes.empty()) throw InputError("no nodes found in " + gml.string());

  std::unordered_map<std::string, std::size_t> index;
  for (std::size_t i = 0; i < nodes.size(); ++i) index.emplace(nodes[i].id, i);
  ConversionSummary summary;
  std::set<std::pair<std::size_t, std::size_t>> undirected;
  std::size_t loops = 0;
  for (const auto& [s, t] : raw_edges) {
    auto a = index.find(s), b = index.find(t);
    if (a == index.end() || b == index.end()) throw InputError("GML edge references unknown node " + s + "/" + t);
    if (a->second == b->second) {
      ++loops;
      continue;
    }
    undirected.insert(std::minmax(a->second, b->second));
  }

  DisjointSets sets(nodes.size());
  for (const auto& [a, b] : undirected) sets.unite(a, b);
  std::vector<std::size_t> size(nodes.size(), 0);
  for (std::size_t i = 0; i < nodes.size(); ++i) ++size[sets.find(i)];
  const std::size_t root = std::max_element(size.begin(), size.end()) - size.begin();

  std::vector<std::size_t> remap(nodes.size(), SIZE_MAX);
  std::vector<std::string> names, labels;
  for (std::size_t i = 0; i < nodes.size(); ++i) {
    if (sets.find(i) != root) continue;
    remap[i] = names.size();
    names.push_back(nodes[i].id);
    labels.push_back(nodes[i].value.empty() ? "unknown" : nodes[i].value);
  }
  std::set<std::pair<std::size_t, std::size_t>> kept;
  for (const auto& [a, b] : undirected)
    if (remap[a] != SIZE_MAX) kept.insert({remap[a], remap[b]});

  write_dataset(out_dir, names, labels, kept);
  summary.nodes = names.size();
  summary.edges = kept.size();
  summary.groups = count_groups(labels);
  summary.notes.push_back(std::to_string(raw_edges.size()) + " directed arcs read, " + std::to_string(loops) +
                          " self-loops dropped");
  summary.notes.push_back(std::to_string(nodes.size() - names.size()) + " nodes outside the largest component dropped");
  return summary;
}

ConversionSummary convert_ml100k(const fs::path& dir, const fs::path& out_dir) {
  static const int kAgeEdges[] = {18, 25, 35, 45, 50, 56};
  static const char* kAgeLabels[] = {"<18", "18-24", "25-34", "35-44", "45-49", "50-55", "56+"};

  std::map<long, std::string> user_group;
  {
    auto in = open_in(dir / "u.user");
    std::string line;
    while (std::getline(in, line)) {
      if (line.empty()) continue;
      std::stringstream ss(line);
      std::string id, age;
      std::getline(ss, id, '|');
      std::getline(ss, age, '|');
      const int a = std::stoi(age);
      std::size_t bin = 0;
      while (bin < std::size(kAgeEdges) && a >= kAgeEdges[bin]) ++bin;
      user_group[std::stol(id)] = kAgeLabels[bin];
    }
  }

  std::set<std::pair<long, long>> ratings;
  std::set<long> movies;
  std::size_t lines = 0;
  {
    auto in = open_in(dir / "u.data");
    long user, movie;
    double rating, ts;
    while (in >> user >> movie >> rating >> ts) {
      ++lines;
      if (!user_group.count(user)) throw InputError("rating by unknown user " + std::to_string(user));
      ratings.insert({user, movie});
      movies.insert(movie);
    }
  }

  std::vector<std::string> names, labels;
  std::map<long, std::size_t> user_index, movie_index;
  for (const auto& [id, g] : user_group) {
    user_index[id] = names.size();
    names.push_back("u" + std::to_string(id));
    labels.push_back(g);
  }
  for (long m : movies) {
    movie_index[m] = names.size();
    names.push_back("m" + std::to_string(m));
    labels.push_back("movie");
  }
  // Users first so the bipartite loader puts them on side 0.
  std::set<std::pair<std::size_t, std::size_t>> edges;
  for (const auto& [u, m] : ratings) edges.insert({user_index[u], movie_index[m]});

  write_dataset(out_dir, names, labels, edges);
  ConversionSummary summary;
  summary.nodes = names.size();
  summary.edges = edges.size();
  summary.groups = count_groups(labels);
  summary.notes.push_back(std::to_string(lines) + " ratings read; load with --bipartite");
  return summary;
}

ConversionSummary convert_facebook(const fs::path& dir, const fs::path& out_dir) {
  const fs::path combined = fs::exists(dir / "facebook_combined.txt") ? dir / "facebook_combined.txt"
                                                                      : dir.parent_path() / "facebook_combined.txt";
  const fs::path ego_dir = fs::exists(dir / "facebook") ? dir / "facebook" : dir;

  std::map<long, std::string> gender;
  std::size_t conflicts = 0;
  auto assign = [&](long node, const std::string& g) {
    auto [it, inserted] = gender.emplace(node, g);
    if (!inserted && it->second != g) ++conflicts;
  };
  std::size_t egos = 0;
  for (const auto& entry : fs::directory_iterator(ego_dir)) {
    if (entry.path().extension() != ".featnames") continue;
    const std::string ego = entry.path().stem().string();
    ++egos;
    std::map<std::size_t, std::string> gender_cols;
    {
      auto in = open_in(entry.path());
      std::string line;
      while (std::getline(in, line)) {
        std::stringstream ss(line);
        std::size_t col;
        std::string name;
        ss >> col;
        std::getline(ss >> std::ws, name);
        if (name.rfind("gender;", 0) == 0) {
          const auto sp = name.find_last_of(' ');
          gender_cols[col] = name.substr(sp == std::string::npos ? 7 : sp + 1);
        }
      }
    }
    auto read_row = [&](std::istream& ss) {
      std::string g;
      int v;
      for (std::size_t col = 0; ss >> v; ++col)
        if (v == 1 && gender_cols.count(col)) g = gender_cols[col];
      return g;
    };
    if (auto in = std::ifstream(ego_dir / (ego + ".feat"))) {
      std::string line;
      while (std::getline(in, line)) {
        std::stringstream ss(line);
        long node;
        ss >> node;
        if (auto g = read_row(ss); !g.empty()) assign(node, g);
      }
    }
    if (auto in = std::ifstream(ego_dir / (ego + ".egofeat"))) {
      if (auto g = read_row(in); !g.empty()) assign(std::stol(ego), g);
    }
  }
  if (egos == 0) throw InputError("no .featnames files found under " + ego_dir.string());

  std::set<std::pair<long, long>> raw;
  std::set<long> seen;
  {
    auto in = open_in(combined);
    long a, b;
    while (in >> a >> b) {
      seen.insert(a);
      seen.insert(b);
      if (a != b) raw.insert(std::minmax(a, b));
    }
  }
  std::vector<std::string> names, labels;
  std::map<long, std::size_t> index;
  for (long v : seen) {
    auto it = gender.find(v);
    if (it == gender.end()) continue;
    index[v] = names.size();
    names.push_back(std::to_string(v));
    labels.push_back(it->second);
  }
  std::set<std::pair<std::size_t, std::size_t>> edges;
  for (const auto& [a, b] : raw)
    if (index.count(a) && index.count(b)) edges.insert({index[a], index[b]});

  write_dataset(out_dir, names, labels, edges);
  ConversionSummary summary;
  summary.nodes = names.size();
  summary.edges = edges.size();
  summary.groups = count_groups(labels);
  summary.notes.push_back(std::to_string(seen.size() - names.size()) + " nodes without a gender feature removed");
  if (conflicts) summary.notes.push_back(std::to_string(conflicts) + " conflicting gender readings (first kept)");
  return summary;
}
