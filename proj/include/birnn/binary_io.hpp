// SPDX-License-Identifier: Apache-2.0
/**
 * @file   binary_io.hpp
 * @brief  Little-endian primitives for the weight and dataset containers.
 */
#pragma once

#include <cstdint>
#include <istream>
#include <ostream>
#include <span>
#include <string>

namespace birnn::io {

void write_u32(std::ostream &out, std::uint32_t v);
void write_u64(std::ostream &out, std::uint64_t v);
void write_f64(std::ostream &out, double v);
void write_f64s(std::ostream &out, std::span<const double> values);
void write_magic(std::ostream &out, const char (&magic)[5]);

std::uint32_t read_u32(std::istream &in);
std::uint64_t read_u64(std::istream &in);
double read_f64(std::istream &in);
void read_f64s(std::istream &in, std::span<double> values);
/// Throws std::runtime_error if the next four bytes differ from `magic`.
void expect_magic(std::istream &in, const char (&magic)[5], const std::string &what);

} // namespace birnn::io
