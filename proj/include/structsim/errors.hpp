#pragma once

#include <cstddef>
#include <stdexcept>
#include <string>

namespace structsim {

class Error : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

class ConfigError : public Error {
public:
    ConfigError(const std::string& msg, std::size_t line = 0, std::size_t column = 0);
    std::size_t line() const noexcept { return line_; }
    std::size_t column() const noexcept { return column_; }

private:
    std::size_t line_;
    std::size_t column_;
};

class DomainError : public Error {
public:
    using Error::Error;
};

class DegeneratePopulation : public Error {
public:
    using Error::Error;
};

class BracketError : public Error {
public:
    using Error::Error;
};

class EligibilityError : public Error {
public:
    using Error::Error;
};

}  // namespace structsim
