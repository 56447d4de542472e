#include "aefenet/ini.hpp"

#include <boost/property_tree/ini_parser.hpp>

#include <charconv>
#include <fstream>
#include <sstream>

namespace aefenet::ini {

namespace {

std::string trim(const std::string& s) {
  const auto first = s.find_first_not_of(" \t\r\n");
  if (first == std::string::npos) return {};
  const auto last = s.find_last_not_of(" \t\r\n");
  return s.substr(first, last - first + 1);
}

template <typename T>
T parse_number(const std::string& key, const std::string& raw) {
  const std::string text = trim(raw);
  T value{};
  const auto* begin = text.data();
  const auto* end = text.data() + text.size();
  auto [ptr, ec] = std::from_chars(begin, end, value);
  if (ec != std::errc() || ptr != end || text.empty()) {
    throw ParseError("config key '" + key + "': cannot parse '" + raw + "'");
  }
  return value;
}

}  // namespace

Tree parse(const std::string& text) {
  std::istringstream in(text);
  Tree tree;
  try {
    boost::property_tree::ini_parser::read_ini(in, tree);
  } catch (const boost::property_tree::ini_parser_error& e) {
    throw ParseError(std::string("config: ") + e.what());
  }
  return tree;
}

Tree read_file(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw ParseError("cannot open config file: " + path.string());
  std::stringstream buffer;
  buffer << in.rdbuf();
  return parse(buffer.str());
}

std::string write(const Tree& tree) {
  std::ostringstream out;
  boost::property_tree::ini_parser::write_ini(out, tree);
  return out.str();
}

bool has(const Tree& tree, const std::string& key) {
  return tree.get_optional<std::string>(key).has_value();
}

std::optional<std::string> get_string(const Tree& tree, const std::string& key) {
  auto v = tree.get_optional<std::string>(key);
  if (!v) return std::nullopt;
  return trim(*v);
}

double get_double(const Tree& tree, const std::string& key, double fallback) {
  auto v = get_string(tree, key);
  return v ? parse_number<double>(key, *v) : fallback;
}

long long get_int(const Tree& tree, const std::string& key, long long fallback) {
  auto v = get_string(tree, key);
  return v ? parse_number<long long>(key, *v) : fallback;
}

std::uint64_t get_u64(const Tree& tree, const std::string& key, std::uint64_t fallback) {
  auto v = get_string(tree, key);
  return v ? parse_number<std::uint64_t>(key, *v) : fallback;
}

std::string get_string(const Tree& tree, const std::string& key, const std::string& fallback) {
  auto v = get_string(tree, key);
  return v ? *v : fallback;
}

std::vector<std::string> split_list(const std::string& value) {
  std::vector<std::string> out;
  std::stringstream in(value);
  std::string item;
  while (std::getline(in, item, ',')) {
    item = trim(item);
    if (!item.empty()) out.push_back(item);
  }
  return out;
}

std::vector<long long> get_int_list(const Tree& tree, const std::string& key,
                                    const std::vector<long long>& fallback) {
  auto v = get_string(tree, key);
  if (!v) return fallback;
  std::vector<long long> out;
  for (const auto& item : split_list(*v)) out.push_back(parse_number<long long>(key, item));
  return out;
}

std::string join(const std::vector<std::string>& items) {
  std::string out;
  for (std::size_t i = 0; i < items.size(); ++i) {
    if (i) out += ", ";
    out += items[i];
  }
  return out;
}

}  // namespace aefenet::ini
