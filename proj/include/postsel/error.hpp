/*
   Copyright 2026 The postsel Authors

   Licensed under the Apache License, Version 2.0 (the "License");
   you may not use this file except in compliance with the License.
   You may obtain a copy of the License at

       http://www.apache.org/licenses/LICENSE-2.0

   Unless required by applicable law or agreed to in writing, software
   distributed under the License is distributed on an "AS IS" BASIS,
   WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
   See the License for the specific language governing permissions and
   limitations under the License.
*/

#pragma once

#include <stdexcept>
#include <string>

namespace postsel {

// Base of everything the library throws on purpose.
class Error : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

// A caller-supplied value is outside its documented range.
class ValidationError : public Error {
public:
    using Error::Error;
};

// A ratio or statistic has an empty denominator (Z = 0, empty selection).
class UndefinedError : public Error {
public:
    using Error::Error;
};

// Least-squares design matrix is rank deficient.
class SingularFitError : public Error {
public:
    using Error::Error;
};

// Requested allocation would exceed the configured record budget.
class ResourceError : public Error {
public:
    using Error::Error;
};

class IoError : public Error {
public:
    using Error::Error;
};

class UsageError : public Error {
public:
    using Error::Error;
};

} // namespace postsel
