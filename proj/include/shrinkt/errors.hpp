#ifndef SHRINKT_ERRORS_HPP
#define SHRINKT_ERRORS_HPP

#include <stdexcept>
#include <string>

/**
 * @file errors.hpp
 *
 * @brief Exception types thrown by the library.
 */

namespace shrinkt {

/**
 * Argument outside the domain of a mathematical function.
 */
class DomainError : public std::domain_error {
public:
    using std::domain_error::domain_error;
};

/**
 * Hyperparameter or mixture estimation could not proceed with the given data.
 */
class EstimationError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

/**
 * Malformed or non-finite input data. The message names the line or cell.
 */
class DataError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

}

#endif
