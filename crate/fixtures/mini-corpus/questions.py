# Hand-authored questions and candidate pools for the mini corpus.
# Each entry: (db_id, difficulty, question, evidence, gold, [8 candidate SQL strings]).
# An empty candidate string means the completion contains no SQL.

TIMEOUT_SQL = "WITH RECURSIVE c(x) AS (SELECT 1 UNION ALL SELECT x + 1 FROM c) SELECT COUNT(*) FROM c"

QUESTIONS = [
    ("school", "simple", "How many students are there?", "",
     "SELECT COUNT(*) FROM students",
     ["SELECT COUNT(*) FROM students",
      "SELECT COUNT(id) FROM students",
      "SELECT COUNT(gpa) FROM students",
      "SELECT COUNT(*) FROM student",
      "SELECT COUNT(DISTINCT name) FROM students",
      "SELECT COUNT(*) FROM students WHERE year > 1",
      "SELECT COUNT(*) FROM students",
      "SELECT id FROM students"]),
    ("school", "simple", "List the names of students in year 1.", "",
     "SELECT name FROM students WHERE year = 1",
     ["SELECT name FROM students WHERE year = 1",
      "SELECT name, id FROM students WHERE year = 1",
      "SELECT name FROM students WHERE year = '1'",
      "SELECT name FROM students WHERE year = 1 ORDER BY name DESC",
      "SELECT id, name FROM students WHERE year = 1",
      "SELECT name FROM students WHERE year == 1",
      "SELECT nme FROM students WHERE year = 1",
      "SELECT name FROM students WHERE year = 2"]),
    ("school", "moderate", "What is the average GPA of students in year 2?",
     "average GPA refers to AVG(gpa)",
     "SELECT AVG(gpa) FROM students WHERE year = 2",
     ["SELECT SUM(gpa) / COUNT(*) FROM students WHERE year = 2",
      "SELECT AVG(gpa) FROM students WHERE year = 2",
      "SELECT SUM(gpa) / COUNT(gpa) FROM students WHERE year = 2",
      "SELECT AVG(gpa) FROM students WHERE year = 2 AND gpa IS NOT NULL",
      "SELECT AVG(COALESCE(gpa, 0)) FROM students WHERE year = 2",
      "SELECT SUM(gpa) / COUNT(*) FROM students WHERE year = 2",
      "SELECT SUM(gpa) / COUNT(*) FROM students WHERE year = 2",
      "SELECT AVG(gpa) FROM students WHERE yr = 2"]),
    ("school", "moderate", "Which courses does Alice take? Give the course titles.", "",
     "SELECT c.title FROM courses c JOIN enrollments e ON c.id = e.course_id "
     "JOIN students s ON s.id = e.student_id WHERE s.name = 'Alice'",
     ["SELECT title FROM courses WHERE id IN (SELECT course_id FROM enrollments WHERE student_id = 1)",
      "SELECT c.title FROM courses c JOIN enrollments e ON c.id = e.course_id "
      "WHERE e.student_id = (SELECT id FROM students WHERE name = 'Alice')",
      "SELECT title FROM courses JOIN enrollments ON courses.id = enrollments.course_id",
      "SELECT c.title FROM courses c JOIN enrollments e ON c.id = e.course_id "
      "JOIN students s ON s.id = e.student_id WHERE s.name = 'alice'",
      "SELECT c.title, e.grade FROM courses c JOIN enrollments e ON c.id = e.course_id WHERE e.student_id = 1",
      "SELECT title FROM courses WHERE id IN (SELECT course_id FROM enrollments WHERE student_id = 1)",
      "SELECT c.title FROM courses c JOIN enrollments e ON c.id = e.course_id "
      "JOIN students s ON s.id = e.student_id WHERE s.name = 'Alice'",
      "SELECT title FROM courses c JOIN enrollment e ON c.id = e.course_id"]),
    ("school", "challenging",
     "Which student has the highest GPA among those enrolled in at least two CS courses?", "",
     "SELECT s.name FROM students s JOIN enrollments e ON s.id = e.student_id "
     "JOIN courses c ON c.id = e.course_id WHERE c.dept = 'CS' GROUP BY s.id "
     "HAVING COUNT(*) >= 2 ORDER BY s.gpa DESC LIMIT 1",
     ["SELECT name FROM students ORDER BY gpa DESC LIMIT 1",
      "SELECT s.name FROM students s JOIN enrollments e ON s.id = e.student_id "
      "JOIN courses c ON c.id = e.course_id WHERE c.dept = 'CS' GROUP BY s.id "
      "HAVING COUNT(*) > 2 ORDER BY s.gpa DESC LIMIT 1",
      "SELECT s.name FROM students s JOIN enrollments e ON s.id = e.student_id "
      "JOIN courses c ON c.id = e.course_id WHERE c.dept = 'CS' GROUP BY s.id "
      "HAVING COUNT(*) >= 2 ORDER BY s.gpa ASC LIMIT 1",
      "SELECT s.name, MAX(s.gpa) FROM students s JOIN enrollments e ON s.id = e.student_id "
      "JOIN courses c ON c.id = e.course_id WHERE c.dept = 'CS' GROUP BY s.id HAVING COUNT(*) >= 2",
      "SELECT s.name FROM students s JOIN enrollments e ON s.id = e.student_id "
      "JOIN courses c ON c.id = e.course_id WHERE c.department = 'CS' GROUP BY s.id",
      "SELECT s.name FROM students s JOIN enrollments e ON s.id = e.student_id "
      "JOIN courses c ON c.id = e.course_id WHERE c.dept = 'CS' GROUP BY s.id HAVING COUNT(*) >= 2",
      "SELECT s.name FROM students s JOIN enrollments e ON s.id = e.student_id "
      "JOIN courses c ON c.id = e.course_id WHERE c.dept = 'CS' GROUP BY s.id "
      "HAVING COUNT(*) >= 2 ORDER BY s.gpa ASC LIMIT 1",
      "SELECT s.name FROM students s JOIN enrollments e ON s.id = e.student_id "
      "JOIN courses c ON c.id = e.course_id WHERE c.dept = 'CS' GROUP BY s.id "
      "HAVING COUNT(*) >= 2 ORDER BY s.gpa DESC LIMIT 1"]),
    ("school", "simple", "How many courses does the MATH department offer?", "",
     "SELECT COUNT(*) FROM courses WHERE dept = 'MATH'",
     ["DELETE FROM courses WHERE dept = 'MATH'",
      "SELECT COUNT(*) FROM courses WHERE dept = 'MATH'",
      "SELECT COUNT(*) FROM courses WHERE dept = 'Math'",
      "SELECT COUNT(title) FROM courses WHERE dept = 'MATH'",
      "SELECT COUNT(*) FROM courses WHERE dept LIKE 'math'",
      "SELECT 2",
      "SELECT COUNT(*) FROM courses GROUP BY dept",
      ""]),
    ("school", "moderate", "List each department with its total credits.", "",
     "SELECT dept, SUM(credits) FROM courses GROUP BY dept",
     ["SELECT dept, SUM(credits) FROM courses GROUP BY dept ORDER BY dept",
      "SELECT SUM(credits), dept FROM courses GROUP BY dept",
      "SELECT dept, TOTAL(credits) FROM courses GROUP BY dept",
      "SELECT dept, COUNT(credits) FROM courses GROUP BY dept",
      "SELECT dept, SUM(credits) FROM courses",
      "SELECT dept, SUM(credits) FROM courses GROUP BY dept; SELECT 1",
      "SELECT dept, SUM(credits) AS total FROM courses GROUP BY 1",
      "SELECT dept, SUM(credits) FROM courses GROUP BY dept HAVING SUM(credits) > 4"]),
    ("school", "challenging",
     "For each student, how many courses did they pass with grade A? Include students with none.", "",
     "SELECT s.name, COUNT(e.course_id) FROM students s LEFT JOIN enrollments e "
     "ON s.id = e.student_id AND e.grade = 'A' GROUP BY s.id",
     [TIMEOUT_SQL,
      "SELECT s.name, COUNT(e.course_id) FROM students s JOIN enrollments e ON s.id = e.student_id "
      "WHERE e.grade = 'A' GROUP BY s.id",
      "SELECT s.name, (SELECT COUNT(*) FROM enrollments e WHERE e.student_id = s.id AND e.grade = 'A') "
      "FROM students s",
      "SELECT s.name, COUNT(e.course_id) FROM students s LEFT JOIN enrollments e ON s.id = e.student_id "
      "WHERE e.grade = 'A' GROUP BY s.id",
      "SELECT s.name, SUM(e.grade = 'A') FROM students s LEFT JOIN enrollments e ON s.id = e.student_id "
      "GROUP BY s.id",
      "SELECT s.name, COUNT(*) FROM students s LEFT JOIN enrollments e ON s.id = e.student_id "
      "AND e.grade = 'A' GROUP BY s.id",
      "SELECT name, COUNT(*) FROM students s LEFT JOIN enrollments e ON s.id = e.student_id "
      "AND e.grade = 'A' GROUP BY s.id",
      "SELECT s.name, COUNT(e.course_id) FROM students s LEFT JOIN enrollments e ON s.id = e.student_id "
      "AND e.grade = 'A' GROUP BY s.id"]),

    ("shop", "simple", "Which cities do our customers live in?", "",
     "SELECT DISTINCT city FROM customers",
     ["SELECT city FROM customers",
      "SELECT DISTINCT city FROM customers",
      "SELECT city, COUNT(*) FROM customers GROUP BY city",
      "SELECT DISTINCT city FROM customer",
      "SELECT name FROM customers",
      "SELECT city FROM customers GROUP BY city",
      "SELECT DISTINCT city FROM customers WHERE city <> 'Paris'",
      "SELECT city FROM customers ORDER BY city"]),
    ("shop", "simple", "List the names of expensive products.", "expensive means price > 500",
     "SELECT name FROM products WHERE price > 500",
     ["SELECT name FROM products WHERE price > 500",
      "SELECT name FROM products WHERE price >= 500",
      "SELECT name, price FROM products WHERE price > 500",
      "SELECT name FROM products WHERE price > 1000",
      "SELECT name FROM products WHERE category = 'electronics'",
      "SELECT name FROM products ORDER BY price DESC LIMIT 1",
      "SELECT name FROM products WHERE cost > 500",
      "SELECT name FROM products WHERE price > 500.0"]),
    ("shop", "moderate", "What is the total revenue from electronics orders?",
     "revenue refers to SUM(price * quantity)",
     "SELECT SUM(p.price * o.quantity) FROM orders o JOIN products p ON p.id = o.product_id "
     "WHERE p.category = 'electronics'",
     ["SELECT SUM(p.price * o.quantity) FROM orders o JOIN products p ON p.id = o.product_id "
      "WHERE p.category = 'electronics'",
      "SELECT SUM(p.price) FROM orders o JOIN products p ON p.id = o.product_id WHERE p.category = 'electronics'",
      "SELECT SUM(price * quantity) FROM orders JOIN products ON products.id = orders.product_id "
      "WHERE category = 'electronics'",
      "SELECT SUM(p.price * o.quantity) FROM orders o, products p WHERE p.id = o.product_id "
      "AND p.category = 'electronics'",
      "SELECT SUM(p.price * o.quantity) FROM orders o JOIN products p ON p.id = o.customer_id "
      "WHERE p.category = 'electronics'",
      "SELECT SUM(p.price * o.quantity) FROM orders o JOIN products p ON p.id = o.product_id "
      "WHERE p.category = 'Electronics'",
      "SELECT TOTAL(p.price * o.quantity) FROM orders o JOIN products p ON p.id = o.product_id "
      "WHERE p.category = 'electronics'",
      "SELECT SUM(p.price * o.qty) FROM orders o JOIN products p ON p.id = o.product_id"]),
    ("shop", "moderate", "Which customers have never placed an order?", "",
     "SELECT name FROM customers WHERE id NOT IN (SELECT customer_id FROM orders)",
     ["SELECT c.name FROM customers c LEFT JOIN orders o ON o.customer_id = c.id WHERE o.id IS NULL",
      "SELECT name FROM customers WHERE id NOT IN (SELECT customer_id FROM orders)",
      "SELECT name FROM customers WHERE id IN (SELECT customer_id FROM orders)",
      "SELECT c.name FROM customers c JOIN orders o ON o.customer_id = c.id WHERE o.id IS NULL",
      "SELECT name FROM customers WHERE NOT EXISTS "
      "(SELECT 1 FROM orders WHERE orders.customer_id = customers.id)",
      "SELECT id FROM customers WHERE id NOT IN (SELECT customer_id FROM orders)",
      "SELECT name FROM customers EXCEPT SELECT c.name FROM customers c JOIN orders o ON o.customer_id = c.id",
      "SELECT name FROM customers WHERE id NOT IN (SELECT customer FROM orders)"]),
    ("shop", "challenging", "Which city has the highest total quantity ordered?", "",
     "SELECT c.city FROM customers c JOIN orders o ON o.customer_id = c.id GROUP BY c.city "
     "ORDER BY SUM(o.quantity) DESC LIMIT 1",
     ["SELECT c.city FROM customers c JOIN orders o ON o.customer_id = c.id GROUP BY c.city "
      "ORDER BY COUNT(*) DESC LIMIT 1",
      "SELECT c.city, SUM(o.quantity) FROM customers c JOIN orders o ON o.customer_id = c.id "
      "GROUP BY c.city ORDER BY 2 DESC LIMIT 1",
      "SELECT city FROM customers WHERE id = (SELECT customer_id FROM orders GROUP BY customer_id "
      "ORDER BY SUM(quantity) DESC LIMIT 1)",
      "SELECT c.city FROM customers c JOIN orders o ON o.customer_id = c.id GROUP BY c.city "
      "ORDER BY SUM(o.quantity) ASC LIMIT 1",
      "SELECT c.city FROM customers c JOIN orders o ON o.customer_id = c.id GROUP BY c.city "
      "ORDER BY SUM(o.quantity) ASC LIMIT 1",
      "SELECT c.city FROM customers c JOIN orders o ON o.customer_id = c.id GROUP BY c.city "
      "ORDER BY SUM(o.quantity) ASC LIMIT 1",
      "SELECT city FROM customers GROUP BY city ORDER BY SUM(quantity) DESC LIMIT 1",
      "SELECT c.city FROM customers c JOIN orders o ON o.customer_id = c.id GROUP BY c.city "
      "ORDER BY SUM(o.quantity) DESC LIMIT 1"]),
    ("shop", "simple", "How many orders were placed in March 2023?", "",
     "SELECT COUNT(*) FROM orders WHERE order_date LIKE '2023-03%'",
     ["SELECT COUNT(*) FROM orders WHERE order_date BETWEEN '2023-03-01' AND '2023-03-31'",
      "SELECT COUNT(*) FROM orders WHERE strftime('%m', order_date) = '03'",
      "SELECT COUNT(*) FROM orders WHERE order_date > '2023-03-01'",
      "SELECT COUNT(*) FROM orders WHERE order_date LIKE '2023-03%'",
      "SELECT COUNT(*) FROM orders WHERE order_date >= '2023-03-01'",
      "SELECT COUNT(*) FROM orders WHERE month(order_date) = 3",
      "SELECT COUNT(*) FROM orders WHERE order_date > '2023-03-01'",
      "SELECT COUNT(*) FROM orders WHERE order_date > '2023-03-01'"]),
    ("shop", "moderate", "What is the average price of office products?", "",
     "SELECT AVG(price) FROM products WHERE category = 'office'",
     ["SELECT AVG(price) FROM products WHERE category = 'office'",
      "SELECT SUM(price) / 2 FROM products WHERE category = 'office'",
      "SELECT ROUND(AVG(price), 1) FROM products WHERE category = 'office'",
      "SELECT AVG(price) FROM products",
      "SELECT AVG(price) FROM products WHERE category = 'office'",
      "SELECT AVG(price) FROM products GROUP BY category HAVING category = 'office'",
      "SELECT CAST(AVG(price) AS INTEGER) FROM products WHERE category = 'office'",
      "SELECT AVG(prices) FROM products WHERE category = 'office'"]),
    ("shop", "challenging", "For each category, name the most expensive product.", "",
     "SELECT category, name FROM products p WHERE price = "
     "(SELECT MAX(price) FROM products WHERE category = p.category)",
     ["SELECT category, name, MAX(price) FROM products GROUP BY category",
      "SELECT category, name FROM products GROUP BY category HAVING price = MAX(price)",
      "SELECT category, name FROM (SELECT category, name, MAX(price) FROM products GROUP BY category)",
      "SELECT name, category FROM products p WHERE price = "
      "(SELECT MAX(price) FROM products WHERE category = p.category)",
      "SELECT category, name FROM products ORDER BY price DESC LIMIT 3",
      "SELECT category, name FROM products p WHERE price = (SELECT MAX(price) FROM products)",
      "SELECT category, name FROM products p WHERE price = "
      "(SELECT MAX(price) FROM products WHERE category = p.category)",
      "SELECT category, name FROM products p WHERE price = "
      "(SELECT MAX(price) FROM products q WHERE q.category = p.category"]),

    ("flights", "simple", "How many flights depart from Lisbon?", "Lisbon airport code is LIS",
     "SELECT COUNT(*) FROM flights WHERE origin = 'LIS'",
     ["SELECT COUNT(*) FROM flights WHERE origin = 'LIS'",
      "SELECT COUNT(*) FROM flights WHERE destination = 'LIS'",
      "SELECT COUNT(*) FROM flights f JOIN airports a ON a.code = f.origin WHERE a.city = 'Lisbon'",
      "SELECT COUNT(*) FROM flights WHERE origin = 'LIS' OR destination = 'LIS'",
      "SELECT COUNT(*) FROM flights WHERE origin = 'lis'",
      "SELECT COUNT(id) FROM flights WHERE origin = 'LIS'",
      "SELECT COUNT(*) FROM flight WHERE origin = 'LIS'",
      "SELECT COUNT(*) FROM flights WHERE origin = 'LIS'"]),
    ("flights", "simple", "List the codes of airports in Spain.", "",
     "SELECT code FROM airports WHERE country = 'Spain'",
     ["SELECT city FROM airports WHERE country = 'Spain'",
      "SELECT code FROM airports WHERE country = 'Spain'",
      "SELECT code FROM airports WHERE country = 'spain'",
      "SELECT code FROM airports WHERE country IN ('Spain')",
      "SELECT code, city FROM airports WHERE country = 'Spain'",
      "SELECT city FROM airports WHERE country = 'Spain'",
      "SELECT city FROM airports WHERE country = 'Spain'",
      "SELECT code FROM airports WHERE country = 'Spain' ORDER BY code"]),
    ("flights", "moderate", "Which airlines operate long-haul flights?", "long-haul means distance > 5000",
     "SELECT DISTINCT a.name FROM airlines a JOIN flights f ON f.airline_id = a.id WHERE f.distance > 5000",
     ["SELECT a.name FROM airlines a JOIN flights f ON f.airline_id = a.id WHERE f.distance > 5000",
      "SELECT name FROM airlines WHERE id IN (SELECT airline_id FROM flights WHERE distance > 5000)",
      "SELECT a.name FROM airlines a JOIN flights f ON f.airline_id = a.id WHERE f.duration_min > 5000",
      "SELECT a.name FROM airlines a JOIN flights f ON f.airline_id = a.id WHERE f.distance > 1000",
      "SELECT a.name FROM airlines a JOIN flights f ON f.airline_id = a.id WHERE f.distance > 500",
      "SELECT airline_id FROM flights WHERE distance > 5000",
      "SELECT a.name FROM airlines a JOIN flights f ON f.airline_id = a.id WHERE f.distance > 5000 "
      "GROUP BY a.name",
      "SELECT a.name FROM airlines a JOIN flight f ON f.airline_id = a.id"]),
    ("flights", "moderate", "What is the average duration in minutes of flights operated by Iberia?", "",
     "SELECT AVG(f.duration_min) FROM flights f JOIN airlines a ON a.id = f.airline_id WHERE a.name = 'Iberia'",
     ["SELECT AVG(duration_min) FROM flights WHERE airline_id = 2",
      "SELECT SUM(duration_min) / COUNT(*) FROM flights WHERE airline_id = 2",
      "SELECT SUM(duration_min) / COUNT(*) FROM flights WHERE airline_id = 2",
      "SELECT SUM(duration_min) * 1.0 / COUNT(*) FROM flights WHERE airline_id = 2",
      "SELECT AVG(f.duration_min) FROM flights f JOIN airlines a ON a.id = f.airline_id WHERE a.name = 'Iberia'",
      "SELECT AVG(duration) FROM flights WHERE airline_id = 2",
      "SELECT SUM(duration_min) / COUNT(*) FROM flights WHERE airline_id = 2",
      "SELECT AVG(duration_min) FROM flights"]),
    ("flights", "challenging", "Which airline flies the greatest total distance, and what is that distance?", "",
     "SELECT a.name, SUM(f.distance) FROM airlines a JOIN flights f ON f.airline_id = a.id "
     "GROUP BY a.id ORDER BY SUM(f.distance) DESC LIMIT 1",
     ["SELECT a.name FROM airlines a JOIN flights f ON f.airline_id = a.id GROUP BY a.id "
      "ORDER BY SUM(f.distance) DESC LIMIT 1",
      "SELECT a.name, SUM(f.distance) AS total FROM airlines a JOIN flights f ON f.airline_id = a.id "
      "GROUP BY a.name ORDER BY total DESC LIMIT 1",
      "SELECT a.name, MAX(f.distance) FROM airlines a JOIN flights f ON f.airline_id = a.id",
      "SELECT a.name, SUM(f.distance) FROM airlines a JOIN flights f ON f.airline_id = a.id "
      "GROUP BY a.id ORDER BY SUM(f.distance) LIMIT 1",
      "SELECT a.name, SUM(f.distance) FROM airlines a JOIN flights f ON f.airline_id = a.id "
      "GROUP BY a.id ORDER BY SUM(f.distance) DESC LIMIT 1",
      "SELECT name, total FROM (SELECT a.name AS name, SUM(f.distance) AS total FROM airlines a "
      "JOIN flights f ON f.airline_id = a.id GROUP BY a.id) ORDER BY total DESC LIMIT 1",
      "SELECT a.name, SUM(f.distance) FROM airlines a JOIN flights f ON f.airline_id = a.id "
      "GROUP BY a.id ORDER BY SUM(f.distance) DESC LIMIT 1",
      "SELECT a.name, SUM(f.distance) FROM airlines a JOIN flights f ON f.airline_id = a.id GROUP BY a.id"]),
    ("flights", "simple", "Which airline has no flights?", "",
     "SELECT name FROM airlines WHERE id NOT IN (SELECT airline_id FROM flights)",
     ["SELECT name FROM airlines WHERE id IN (SELECT airline_id FROM flights)",
      "SELECT name FROM airline WHERE id NOT IN (SELECT airline_id FROM flights)",
      "SELECT airlines.name FROM airlines JOIN flights ON flights.airline_id = airlines.id "
      "WHERE flights.id IS NULL",
      "SELECT name FROM airlines WHERE country = 'Nowhere' AND id NOT IN (SELECT airline_ids FROM flights)",
      "SELECT id FROM airlines WHERE id NOT IN (SELECT airline_id FROM flights)",
      "SELECT COUNT(*) FROM airlines WHERE id NOT IN (SELECT airline_id FROM flights)",
      "SELECT name FROM airlines LIMIT 1",
      ""]),
    ("flights", "moderate", "List the routes (origin and destination) that take longer than two hours.", "",
     "SELECT origin, destination FROM flights WHERE duration_min > 120",
     ["SELECT origin, destination FROM flights WHERE duration > 120",
      "SELECT origin, destination FROM flight WHERE duration_min > 120",
      "SELECT origin, destination FROM flights WHERE duration_min > 120 AND",
      "SELEC origin, destination FROM flights",
      "SELECT origin, dest FROM flights WHERE duration_min > 120",
      "UPDATE flights SET duration_min = 0",
      "CREATE TABLE tmp (x INTEGER)",
      "SELECT origin, destination FROM flights WHERE duration_min > 120 ORDER BY"]),
    ("flights", "challenging", "Which countries have both an airport and an airline based there?", "",
     "SELECT country FROM airports INTERSECT SELECT country FROM airlines",
     ["SELECT DISTINCT a.country FROM airports a JOIN airlines l ON l.country = a.country",
      "SELECT country FROM airports UNION SELECT country FROM airlines",
      "SELECT country FROM airports WHERE country IN (SELECT country FROM airlines)",
      "SELECT country FROM airports INTERSECT SELECT country FROM airlines",
      "SELECT country FROM airports EXCEPT SELECT country FROM airlines",
      "SELECT country FROM airlines WHERE country IN (SELECT country FROM airports)",
      "SELECT a.country, COUNT(*) FROM airports a JOIN airlines l ON l.country = a.country GROUP BY a.country",
      "SELECT country FROM airports INTERSECT SELECT country FROM airline"]),
]

# Duplicate of the first question (case and spacing differ); loading must drop it.
DUPLICATE = ("school", "simple", "how many   STUDENTS are there?", "", "SELECT COUNT(*) FROM students")
