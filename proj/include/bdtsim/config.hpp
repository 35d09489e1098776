#pragma once

#include <fstream>
#include <map>
#include <sstream>
#include <stdexcept>
#include <string>
#include <vector>

namespace bdtsim {

// INI-style configuration: [section] headers, key = value lines, full-line
// comments starting with '#' or ';'. Lists are comma-separated.
class Config {
public:
    static Config parse(std::istream& in, const std::string& origin = "<stream>") {
        Config cfg;
        std::string line, section;
        std::size_t lineno = 0;
        while (std::getline(in, line)) {
            ++lineno;
            const std::string s = trim(line);
            if (s.empty() || s[0] == '#' || s[0] == ';') continue;
            if (s.front() == '[') {
                if (s.back() != ']')
                    throw std::runtime_error(origin + ":" + std::to_string(lineno) +
                                             ": unterminated section header");
                section = trim(s.substr(1, s.size() - 2));
                continue;
            }
            const std::size_t eq = s.find('=');
            if (eq == std::string::npos)
                throw std::runtime_error(origin + ":" + std::to_string(lineno) +
                                         ": expected key = value");
            cfg.values_[section][trim(s.substr(0, eq))] = trim(s.substr(eq + 1));
        }
        return cfg;
    }

    static Config load(const std::string& path) {
        std::ifstream in(path);
        if (!in) throw std::runtime_error("config: cannot open " + path);
        return parse(in, path);
    }

    bool has(const std::string& section, const std::string& key) const {
        auto s = values_.find(section);
        return s != values_.end() && s->second.count(key) > 0;
    }

    std::string get_string(const std::string& section, const std::string& key,
                           const std::string& fallback = {}) const {
        auto s = values_.find(section);
        if (s == values_.end()) return fallback;
        auto k = s->second.find(key);
        return k == s->second.end() ? fallback : k->second;
    }

    double get_double(const std::string& section, const std::string& key, double fallback) const {
        if (!has(section, key)) return fallback;
        return parse_double(section, key, get_string(section, key));
    }

    long long get_int(const std::string& section, const std::string& key,
                      long long fallback) const {
        if (!has(section, key)) return fallback;
        const std::string v = get_string(section, key);
        try {
            std::size_t used = 0;
            const long long out = std::stoll(v, &used);
            if (used != v.size()) throw std::invalid_argument("");
            return out;
        } catch (const std::exception&) {
            throw std::runtime_error("config: [" + section + "] " + key + ": not an integer: " + v);
        }
    }

    bool get_bool(const std::string& section, const std::string& key, bool fallback) const {
        if (!has(section, key)) return fallback;
        const std::string v = get_string(section, key);
        if (v == "true" || v == "1" || v == "yes") return true;
        if (v == "false" || v == "0" || v == "no") return false;
        throw std::runtime_error("config: [" + section + "] " + key + ": not a boolean: " + v);
    }

    std::vector<double> get_double_list(const std::string& section, const std::string& key,
                                        std::vector<double> fallback = {}) const {
        if (!has(section, key)) return fallback;
        std::vector<double> out;
        std::stringstream ss(get_string(section, key));
        std::string item;
        while (std::getline(ss, item, ','))
            out.push_back(parse_double(section, key, trim(item)));
        return out;
    }

    std::vector<std::string> get_string_list(const std::string& section, const std::string& key,
                                             std::vector<std::string> fallback = {}) const {
        if (!has(section, key)) return fallback;
        std::vector<std::string> out;
        std::stringstream ss(get_string(section, key));
        std::string item;
        while (std::getline(ss, item, ',')) out.push_back(trim(item));
        return out;
    }

private:
    static std::string trim(const std::string& s) {
        const std::size_t a = s.find_first_not_of(" \t\r\n");
        if (a == std::string::npos) return "";
        const std::size_t b = s.find_last_not_of(" \t\r\n");
        return s.substr(a, b - a + 1);
    }

    double parse_double(const std::string& section, const std::string& key,
                        const std::string& v) const {
        try {
            std::size_t used = 0;
            const double out = std::stod(v, &used);
            if (used != v.size()) throw std::invalid_argument("");
            return out;
        } catch (const std::exception&) {
            throw std::runtime_error("config: [" + section + "] " + key + ": not a number: " + v);
        }
    }

    std::map<std::string, std::map<std::string, std::string>> values_;
};

}  // namespace bdtsim
