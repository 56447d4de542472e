#pragma once

#include "aefenet/common.hpp"

#include <boost/property_tree/ptree.hpp>

#include <filesystem>
#include <optional>
#include <string>
#include <vector>

// Thin typed layer over Boost.PropertyTree's INI reader. Keys are addressed
// as "section.key"; section names therefore must not contain dots.
namespace aefenet::ini {

using Tree = boost::property_tree::ptree;

Tree parse(const std::string& text);
Tree read_file(const std::filesystem::path& path);
std::string write(const Tree& tree);

bool has(const Tree& tree, const std::string& key);
std::optional<std::string> get_string(const Tree& tree, const std::string& key);

double get_double(const Tree& tree, const std::string& key, double fallback);
long long get_int(const Tree& tree, const std::string& key, long long fallback);
std::uint64_t get_u64(const Tree& tree, const std::string& key, std::uint64_t fallback);
std::string get_string(const Tree& tree, const std::string& key, const std::string& fallback);

/// Comma separated list; whitespace around items is trimmed.
std::vector<std::string> split_list(const std::string& value);
std::vector<long long> get_int_list(const Tree& tree, const std::string& key,
                                    const std::vector<long long>& fallback);

std::string join(const std::vector<std::string>& items);

}  // namespace aefenet::ini
