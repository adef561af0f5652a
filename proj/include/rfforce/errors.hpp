#pragma once

#include <stdexcept>
#include <string>

namespace rfforce {

// Base of every error the library throws. Each subtype carries the CLI exit
// code it maps to so the harness does not need a translation table.
class error : public std::runtime_error {
public:
    error(const std::string& what, int exit_code) : std::runtime_error(what), exit_code_(exit_code) {}
    int exit_code() const noexcept { return exit_code_; }

private:
    int exit_code_;
};

namespace exit_codes {
inline constexpr int ok = 0;
inline constexpr int usage = 2;
inline constexpr int data = 3;
inline constexpr int estimation = 4;
}  // namespace exit_codes

class input_error : public error {
public:
    explicit input_error(const std::string& what) : error(what, exit_codes::usage) {}
};

class config_error : public error {
public:
    config_error(const std::string& path, const std::string& what)
        : error(path.empty() ? what : path + ": " + what, exit_codes::usage), path_(path) {}
    const std::string& path() const noexcept { return path_; }

private:
    std::string path_;
};

class model_error : public error {
public:
    explicit model_error(const std::string& what) : error(what, exit_codes::data) {}
};

class range_error : public error {
public:
    explicit range_error(const std::string& what) : error(what, exit_codes::data) {}
};

class simulation_error : public error {
public:
    simulation_error(const std::string& what, double timestamp)
        : error(what, exit_codes::data), timestamp_(timestamp) {}
    double timestamp() const noexcept { return timestamp_; }

private:
    double timestamp_;
};

class import_error : public error {
public:
    import_error(const std::string& what, std::size_t line)
        : error("line " + std::to_string(line) + ": " + what, exit_codes::data), line_(line) {}
    std::size_t line() const noexcept { return line_; }

private:
    std::size_t line_;
};

class fit_error : public error {
public:
    explicit fit_error(const std::string& what) : error(what, exit_codes::data) {}
};

class calibration_error : public error {
public:
    explicit calibration_error(const std::string& what) : error(what, exit_codes::data) {}
};

class estimation_error : public error {
public:
    explicit estimation_error(const std::string& what) : error(what, exit_codes::estimation) {}
};

class extrapolation_error : public estimation_error {
public:
    explicit extrapolation_error(const std::string& what) : estimation_error(what) {}
};

}  // namespace rfforce
