#pragma once

#include <gtest/gtest.h>

#include <rdelab/error.hpp>

#define EXPECT_ERROR_KIND(stmt, expected)                                   \
    do {                                                                    \
        try {                                                               \
            stmt;                                                           \
            ADD_FAILURE() << "no exception from " #stmt;                    \
        } catch (const rdelab::Error& e) {                                  \
            EXPECT_EQ(e.kind(), expected) << e.what();                      \
        }                                                                   \
    } while (0)
