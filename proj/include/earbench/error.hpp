/*
Copyright 2026 The earbench Authors
Licensed under the Apache License, Version 2.0 (the "License");
you may not use this file except in compliance with the License.
you may obtain a copy of the License at

                http://www.apache.org/licenses/LICENSE-2.0

Unless required by applicable law or agreed to in writing, software
distributed under the License is distributed on an "AS IS" BASIS,
WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
See the License for the specific language governing permissions and
limitations under the License.
*/

#ifndef EARBENCH_ERROR_HPP
#define EARBENCH_ERROR_HPP

#include <stdexcept>
#include <string>

namespace earbench {

// Invalid data or violated precondition (bad shapes, unknown ids, malformed
// files). The CLI maps this to exit status 2.
class DataError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

// Malformed file contents (bad magic, truncation, unparsable tokens).
class FormatError : public DataError {
public:
    using DataError::DataError;
};

// The file system refused us. Exit status 3.
class IoError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

} // namespace earbench

#endif
